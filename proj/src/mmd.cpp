#include "sigmmd/mmd.hpp"

#include <cmath>
#include <numeric>

#include "sigmmd/errors.hpp"
#include "sigmmd/parallel.hpp"
#include "sigmmd/rng.hpp"

namespace sigmmd {

MMDResult mmd_unbiased(const Matrix& Kxx, const Matrix& Kxy, const Matrix& Kyy) {
    const std::size_t m = Kxx.rows();
    if (m < 2) throw invalid_input("mmd_unbiased: needs at least 2 samples per side");
    if (Kxx.cols() != m || Kyy.rows() != m || Kyy.cols() != m || Kxy.rows() != m ||
        Kxy.cols() != m) {
        throw invalid_input("mmd_unbiased: Gram blocks must all be m x m");
    }
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                xx += Kxx(i, j);
                yy += Kyy(i, j);
            }
            xy += Kxy(i, j);
        }
    }
    const double md = static_cast<double>(m);
    MMDResult out;
    out.m = m;
    out.statistic = xx / (md * (md - 1.0)) - 2.0 * xy / (md * md) + yy / (md * (md - 1.0));
    if (!std::isfinite(out.statistic)) throw numeric_fault("mmd_unbiased: non-finite statistic");
    return out;
}

double mmd_from_pooled(const Matrix& pooled, const std::vector<std::size_t>& idx, std::size_t m) {
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t xi = idx[i];
        const std::size_t yi = idx[m + i];
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t xj = idx[j];
            const std::size_t yj = idx[m + j];
            if (i != j) {
                xx += pooled(xi, xj);
                yy += pooled(yi, yj);
            }
            xy += pooled(xi, yj);
        }
    }
    const double md = static_cast<double>(m);
    return xx / (md * (md - 1.0)) - 2.0 * xy / (md * md) + yy / (md * (md - 1.0));
}

PermutationTestResult permutation_test_pooled(const Matrix& pooled, std::size_t m,
                                              std::size_t n_perm, std::uint64_t seed,
                                              int threads) {
    if (m < 2) throw invalid_input("permutation_test: needs at least 2 samples per side");
    if (pooled.rows() != 2 * m || pooled.cols() != 2 * m)
        throw invalid_input("permutation_test: pooled Gram must be 2m x 2m");
    if (n_perm < 1) throw invalid_input("permutation_test: needs at least 1 permutation");

    std::vector<std::size_t> identity(2 * m);
    std::iota(identity.begin(), identity.end(), 0);
    const double observed = mmd_from_pooled(pooled, identity, m);

    // Ties count as >=, keeping the test conservative.
    std::vector<std::uint8_t> ge(n_perm, 0);
    parallel_for(n_perm, threads, [&](std::size_t p) {
        Rng rng = Rng::stream(seed, p);
        std::vector<std::size_t> idx(2 * m);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        ge[p] = mmd_from_pooled(pooled, idx, m) >= observed ? 1 : 0;
    });
    std::size_t count = 0;
    for (std::uint8_t g : ge) count += g;

    PermutationTestResult out;
    out.statistic = observed;
    out.n_ge = count;
    out.n_permutations = n_perm;
    out.seed = seed;
    out.p_value = (1.0 + static_cast<double>(count)) / (1.0 + static_cast<double>(n_perm));
    out.p_value_raw = static_cast<double>(count) / static_cast<double>(n_perm);
    return out;
}

PermutationTestResult permutation_test(const std::vector<Matrix>& X, const std::vector<Matrix>& Y,
                                       const SigKernelConfig& cfg, std::size_t n_perm,
                                       std::uint64_t seed, int threads) {
    if (X.size() != Y.size()) throw invalid_input("permutation_test: batch sizes must match");
    std::vector<Matrix> pooled_paths;
    pooled_paths.reserve(X.size() + Y.size());
    pooled_paths.insert(pooled_paths.end(), X.begin(), X.end());
    pooled_paths.insert(pooled_paths.end(), Y.begin(), Y.end());
    const GramMatrix pooled = gram_symmetric(pooled_paths, cfg, threads);
    return permutation_test_pooled(pooled.entries, X.size(), n_perm, seed, threads);
}

}  // namespace sigmmd
