#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

#include "sigmmd/matrix.hpp"
#include "sigmmd/rng.hpp"

namespace sigmmd {

// dS = mu S dt + sqrt(v) S dW1, dv = kappa (theta - v) dt + sigma sqrt(v) dW2,
// corr(dW1, dW2) = rho. Defaults are the benchmark configuration used by the
// validation experiment.
struct HestonParams {
    double mu = 0.2;
    double kappa = 1.0;
    double theta = 0.25;
    double sigma = 0.7;
    double rho = -0.7;
    double v0 = 0.09;

    void validate() const;

    // Degenerate parameters that freeze the variance at v0, so the same seed
    // yields iid-Gaussian noise paired draw-for-draw with the full model.
    HestonParams iid_surrogate() const;
};

struct HestonBatch {
    Matrix log_prices;  // n_paths x (n_steps + 1), first column 0
    Matrix variances;   // n_paths x (n_steps + 1), first column v0
};

// (e1, rho e1 + sqrt(1 - rho^2) e2) from two standard normal draws
std::pair<double, double> correlated_normals(Rng& rng, double rho);

// Euler steps on (log S, v) with full truncation: max(v, 0) enters drift and
// diffusion, and reported variances are clamped at 0. Path i draws from
// Rng::stream(seed, i), so results do not depend on the thread count.
HestonBatch heston_simulate(const HestonParams& params, std::size_t n_steps, double dt,
                            std::size_t n_paths, std::uint64_t seed, int threads = 0);

// Noise tensors for the validation experiment: each of the d_z columns of
// each tensor is (log S_{t_i} - log S_{t_i-1}) / sqrt(dt v0) from its own
// independent driftless path. Requires params.mu == 0.
std::vector<Matrix> heston_noise(const HestonParams& params, std::size_t n_steps, double dt,
                                 std::size_t n_tensors, std::size_t d_z, std::uint64_t seed,
                                 int threads = 0);

}  // namespace sigmmd
