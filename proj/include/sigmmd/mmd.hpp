#pragma once

#include <cstdint>
#include <vector>

#include "sigmmd/matrix.hpp"
#include "sigmmd/sig_kernel.hpp"

namespace sigmmd {

struct MMDResult {
    double statistic = 0.0;
    std::size_t m = 0;
};

struct PermutationTestResult {
    double statistic = 0.0;
    double p_value = 1.0;      // plus-one smoothed: (1 + #{perm >= obs}) / (1 + n_perm)
    double p_value_raw = 1.0;  // #{perm >= obs} / n_perm
    std::size_t n_ge = 0;
    std::size_t n_permutations = 0;
    std::uint64_t seed = 0;
};

// Unbiased MMD^2 estimate from Gram blocks: off-diagonal averages of Kxx and
// Kyy minus twice the full average of Kxy. May be negative under the null.
MMDResult mmd_unbiased(const Matrix& Kxx, const Matrix& Kxy, const Matrix& Kyy);

// Two-sample permutation test. The pooled (2m x 2m) Gram matrix is computed
// once; each permutation re-partitions its indices. Permutation p draws its
// own Rng stream from (seed, p), so any parallel schedule gives the same
// result.
PermutationTestResult permutation_test(const std::vector<Matrix>& X, const std::vector<Matrix>& Y,
                                       const SigKernelConfig& cfg, std::size_t n_perm,
                                       std::uint64_t seed, int threads = 0);

// Same test starting from a precomputed pooled Gram whose first m rows are X.
PermutationTestResult permutation_test_pooled(const Matrix& pooled, std::size_t m,
                                              std::size_t n_perm, std::uint64_t seed,
                                              int threads = 0);

// Statistic for one index split of a pooled Gram: idx[0..m) label the X side,
// idx[m..2m) the Y side.
double mmd_from_pooled(const Matrix& pooled, const std::vector<std::size_t>& idx, std::size_t m);

}  // namespace sigmmd
