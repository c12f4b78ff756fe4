#pragma once

// Brute-force truncated signatures in the tensor algebra, used as an oracle
// for the dynamic-program signature kernel. Level k of a path in R^d is a
// flat vector of d^k iterated-integral coefficients. Only practical for tiny
// paths and low truncation orders, which is exactly the oracle's job.

#include <cstddef>
#include <vector>

#include "sigmmd/matrix.hpp"

namespace sigmmd::testing {

using Levels = std::vector<std::vector<double>>;  // [k] -> coefficients, k = 0..m

inline std::vector<double> kron(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() * b.size());
    std::size_t idx = 0;
    for (double av : a) {
        for (double bv : b) out[idx++] = av * bv;
    }
    return out;
}

// Signature of one linear segment with increment v: level k = v^{(x)k} / k!.
inline Levels segment_signature(const std::vector<double>& v, int order) {
    Levels sig(order + 1);
    sig[0] = {1.0};
    std::vector<double> power{1.0};
    double factorial = 1.0;
    for (int k = 1; k <= order; ++k) {
        power = kron(power, v);
        factorial *= k;
        sig[k] = power;
        for (double& c : sig[k]) c /= factorial;
    }
    return sig;
}

// Chen's identity: the signature of a concatenation is the tensor product.
inline Levels chen_product(const Levels& a, const Levels& b, int order, std::size_t dim) {
    Levels out(order + 1);
    std::size_t len = 1;
    for (int level = 0; level <= order; ++level) {
        out[level].assign(len, 0.0);
        for (int i = 0; i <= level; ++i) {
            const auto prod = kron(a[i], b[level - i]);
            for (std::size_t c = 0; c < len; ++c) out[level][c] += prod[c];
        }
        len *= dim;
    }
    return out;
}

// Full truncated signature of a piecewise-linear path given as d x n matrix.
inline Levels path_signature(const Matrix& points, int order) {
    const std::size_t d = points.rows();
    std::vector<double> inc(d);
    for (std::size_t c = 0; c < d; ++c) inc[c] = points(c, 1) - points(c, 0);
    Levels sig = segment_signature(inc, order);
    for (std::size_t p = 2; p < points.cols(); ++p) {
        for (std::size_t c = 0; c < d; ++c) inc[c] = points(c, p) - points(c, p - 1);
        sig = chen_product(sig, segment_signature(inc, order), order, d);
    }
    return sig;
}

// <Sig(x), Sig(y)> truncated at `order`, assuming the linear static kernel
// (the lift is the identity, so signatures live in plain tensor space).
inline double signature_inner(const Matrix& x, const Matrix& y, int order) {
    const Levels sx = path_signature(x, order);
    const Levels sy = path_signature(y, order);
    double total = 0.0;
    for (int k = 0; k <= order; ++k) {
        for (std::size_t c = 0; c < sx[k].size(); ++c) total += sx[k][c] * sy[k][c];
    }
    return total;
}

}  // namespace sigmmd::testing
