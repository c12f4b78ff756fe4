#include "sigmmd/static_kernel.hpp"

#include <cmath>

#include "sigmmd/errors.hpp"

namespace sigmmd {

void StaticKernelConfig::validate() const {
    if (kind == Kind::rational_quadratic && alpha <= 0.0)
        throw config_error("static kernel: alpha must be > 0");
    if (kind != Kind::linear && length_scale <= 0.0)
        throw config_error("static kernel: length_scale must be > 0");
}

double static_from_sqdist(double sqdist, const StaticKernelConfig& cfg) {
    const double l2 = cfg.length_scale * cfg.length_scale;
    switch (cfg.kind) {
        case StaticKernelConfig::Kind::rational_quadratic:
            return std::pow(1.0 + sqdist / (2.0 * cfg.alpha * l2), -cfg.alpha);
        case StaticKernelConfig::Kind::gaussian:
            return std::exp(-sqdist / (2.0 * l2));
        case StaticKernelConfig::Kind::linear:
            throw invalid_input("static kernel: linear kind is not a function of distance");
    }
    return 0.0;
}

double static_from_sqdist_grad(double sqdist, const StaticKernelConfig& cfg) {
    const double l2 = cfg.length_scale * cfg.length_scale;
    switch (cfg.kind) {
        case StaticKernelConfig::Kind::rational_quadratic:
            return -0.5 / l2 * std::pow(1.0 + sqdist / (2.0 * cfg.alpha * l2), -cfg.alpha - 1.0);
        case StaticKernelConfig::Kind::gaussian:
            return -0.5 / l2 * std::exp(-sqdist / (2.0 * l2));
        case StaticKernelConfig::Kind::linear:
            throw invalid_input("static kernel: linear kind is not a function of distance");
    }
    return 0.0;
}

double static_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const StaticKernelConfig& cfg) {
    cfg.validate();
    if (x.size() != y.size()) throw invalid_input("static_eval: dimension mismatch");
    if (cfg.kind == StaticKernelConfig::Kind::linear) {
        double dot = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) dot += x[c] * y[c];
        return dot;
    }
    double sq = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double d = x[c] - y[c];
        sq += d * d;
    }
    return static_from_sqdist(sq, cfg);
}

Matrix static_gram(const Matrix& x, const Matrix& y, const StaticKernelConfig& cfg) {
    cfg.validate();
    if (x.rows() != y.rows()) throw invalid_input("static_gram: channel count mismatch");
    const std::size_t nx = x.cols();
    const std::size_t ny = y.cols();
    const std::size_t d = x.rows();
    Matrix out(nx, ny);
    if (cfg.kind == StaticKernelConfig::Kind::linear) {
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += x(c, i) * y(c, j);
                out(i, j) = dot;
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = x(c, i) - y(c, j);
                sq += diff * diff;
            }
            out(i, j) = static_from_sqdist(sq, cfg);
        }
    }
    return out;
}

}  // namespace sigmmd
