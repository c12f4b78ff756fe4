#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sigmmd/paths.hpp"

namespace sigmmd {

// Moments of daily log returns with business-day annualization (252/year).
// Kurtosis is excess. Skew and kurtosis are absent on zero-variance input.
struct MomentReport {
    double ann_return = 0.0;
    double volatility = 0.0;
    std::optional<double> skew;
    std::optional<double> kurtosis;
};

MomentReport moments(const std::vector<double>& returns);

// Sample autocorrelation at lags 1..max_lag with the biased 1/n covariance
// normalizer. squared = true correlates the element-wise squares.
std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag, bool squared);

// Pearson correlation of r_t with r^2_{t+tau} for tau = 1..max_lag.
std::vector<double> leverage_corr(const std::vector<double>& returns, std::size_t max_lag);

// Per-coordinate mean and mean absolute deviation across equal-length curves.
struct AggregatedCurve {
    std::vector<double> mean;
    std::vector<double> mad;
};
AggregatedCurve aggregate_curves(const std::vector<std::vector<double>>& curves);

// Mean and standard deviation of a sample of scalar statistics.
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};
MeanSd mean_sd(const std::vector<double>& xs);

struct GainLossPoint {
    double threshold = 0.0;
    std::optional<double> ratio;  // P(r > 0 given |r| > threshold)
    std::size_t exceedances = 0;
    bool low_confidence = false;  // fewer than 30 exceedances
};

std::vector<GainLossPoint> gain_loss_ratio(const std::vector<double>& returns,
                                           const std::vector<double>& thresholds);

// Evenly spaced thresholds from 0 to the 95th percentile of |r|
// (linear-interpolation percentile).
std::vector<double> gain_loss_grid(const std::vector<double>& returns, std::size_t n_points);

// exp(x_end - x_start) per path: price endpoints with starts normalized to 1
std::vector<double> endpoint_summary(const std::vector<LogPath>& paths);

}  // namespace sigmmd
