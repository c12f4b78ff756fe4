#pragma once

#include <cstddef>
#include <vector>

#include "sigmmd/matrix.hpp"

namespace sigmmd {

// Static (state-space) kernel on R^d. The linear kind exists for oracle
// testing: with it the lifted path equals the original path, so signature
// kernels can be checked against explicitly computed signatures.
struct StaticKernelConfig {
    enum class Kind { rational_quadratic, gaussian, linear };
    Kind kind = Kind::rational_quadratic;
    double alpha = 1.0;
    double length_scale = 0.1;

    void validate() const;
};

double static_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const StaticKernelConfig& cfg);

// Pairwise kernel matrix between the columns of two channel-major point
// matrices: out(i, j) = k(x[:,i], y[:,j]).
Matrix static_gram(const Matrix& x, const Matrix& y, const StaticKernelConfig& cfg);

// Kernel value from a squared distance (rational_quadratic and gaussian) and
// its derivative wrt the squared distance; used by the differentiable path.
double static_from_sqdist(double sqdist, const StaticKernelConfig& cfg);
double static_from_sqdist_grad(double sqdist, const StaticKernelConfig& cfg);

}  // namespace sigmmd
