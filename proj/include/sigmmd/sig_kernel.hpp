#pragma once

#include <vector>

#include "sigmmd/matrix.hpp"
#include "sigmmd/paths.hpp"
#include "sigmmd/static_kernel.hpp"

namespace sigmmd {

struct SigKernelConfig {
    StaticKernelConfig static_kernel;
    int order = 10;

    void validate() const;
};

struct GramMatrix {
    Matrix entries;
    SigKernelConfig config;
};

// Double difference of a pointwise static-kernel matrix G ((P+1) x (Q+1)):
// K[i][j] = G[i+1][j+1] - G[i][j+1] - G[i+1][j] + G[i][j], the pairwise
// inner products of lifted path increments.
Matrix increment_matrix(const Matrix& pointwise_gram);

// Truncated signature kernel from the increment matrix. The recursion runs
// over run-length states (a, b) per level so repeated increment indices are
// weighted by 1/(run!), which makes the result exact for piecewise-linear
// lifted paths at truncation `order`.
double sig_kernel_from_increments(const Matrix& K, int order);

// Forward pass that keeps every level's state grid, plus the adjoint that
// maps d(result) back to d(K). Level n's grid holds n*n matrices.
struct SigKernelLevels {
    std::vector<std::vector<Matrix>> grids;
};
double sig_kernel_forward_stored(const Matrix& K, int order, SigKernelLevels& levels);
Matrix sig_kernel_increment_grad(const Matrix& K, int order, const SigKernelLevels& levels,
                                 double seed);

// Signature kernel of two channel-major point matrices (d x n_points).
double sig_kernel(const Matrix& x_points, const Matrix& y_points, const SigKernelConfig& cfg);
double sig_kernel(const AugmentedPath& x, const AugmentedPath& y, const SigKernelConfig& cfg);

// Gram matrices over batches of channel-major point matrices. Entries are
// computed independently and written to disjoint slots, so any thread count
// produces identical results.
GramMatrix gram(const std::vector<Matrix>& X, const std::vector<Matrix>& Y,
                const SigKernelConfig& cfg, int threads = 0);
GramMatrix gram_symmetric(const std::vector<Matrix>& X, const SigKernelConfig& cfg,
                          int threads = 0);

}  // namespace sigmmd
