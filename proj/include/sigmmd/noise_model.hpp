#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

#include "sigmmd/matrix.hpp"

namespace sigmmd {

// Tail transform v = U exp(delta/2 U^2) sigma + mu with U = (u - mu)/sigma.
// delta >= 0 inflates tails, so the inverse lightens them.
struct LambertParams {
    double delta = 0.0;
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const;
};

// Conditional variance sigma_t^2 = omega + sum_i beta_i z_{t-i}^2.
struct MAParams {
    double omega = 1.0;
    std::vector<double> betas;

    std::size_t p() const { return betas.size(); }
    void validate() const;
};

struct NoiseModel {
    LambertParams lambert;
    MAParams ma;
    // transformed series aligned to the return dates, used as lag history
    std::vector<double> gaussianized_history;

    void validate() const;
};

double lambert_forward(double u, const LambertParams& params);
double lambert_inverse(double v, const LambertParams& params);

// r / dt, per element
std::vector<double> annualize(const std::vector<double>& returns, const std::vector<double>& dts);

struct Standardized {
    std::vector<double> values;
    double mean = 0.0;
    double sd = 1.0;
};
Standardized standardize(const std::vector<double>& xs);

struct GaussianizeResult {
    std::vector<double> r_w;
    LambertParams params;
    std::size_t iterations = 0;
    double transformed_kurtosis = 0.0;
};

// Iterative moment matching: pick delta in [0,5] by bisection so the
// back-transformed series has kurtosis 3, re-estimate mu and sigma from the
// transformed series, repeat. Inputs with kurtosis below 3 pin delta at 0
// (the family can only lighten tails). Kurtosis stuck above 3 + 1e-3 at
// delta = 5 after the iteration cap raises numeric_fault.
GaussianizeResult gaussianize(const std::vector<double>& r_z);

struct MAFitOptions {
    std::size_t max_steps = 12000;
    double grad_tol = 1e-6;   // early stop on max abs gradient of mean NLL
    double fail_tol = 1e-3;   // above this at the step cap the fit throws
};

MAParams fit_ma(const std::vector<double>& z, std::size_t p, const MAFitOptions& opts = {});

// Joint fit over several series; each contributes likelihood terms from
// index p on, so lags never cross segment boundaries.
MAParams fit_ma_segments(const std::vector<std::vector<double>>& segments, std::size_t p,
                         const MAFitOptions& opts = {});

// Shared lag history H_z is the p transformed values ending at anchor_index;
// each of the d_z dimensions then evolves independently with its own
// epsilon stream. Returns an n x d_z matrix.
Matrix sample_noise(const NoiseModel& model, std::size_t anchor_index, std::size_t n,
                    std::size_t d_z, std::uint64_t seed);

// Maximal index ranges [first, last) where the running peak-to-current drop
// of the price exp(log_price) exceeds threshold (0.30 marks a 30% drawdown).
std::vector<std::pair<std::size_t, std::size_t>> drawdown_windows(
    const std::vector<double>& log_prices, double threshold);

// average = true: fit each group separately and return the element-wise mean
// of (omega, betas). average = false: one joint fit across all groups.
MAParams fit_robust(const std::vector<std::vector<double>>& groups, std::size_t p, bool average,
                    const MAFitOptions& opts = {});

}  // namespace sigmmd
