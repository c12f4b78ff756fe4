#include "sigmmd/eval_stats.hpp"

#include <algorithm>
#include <cmath>

#include "sigmmd/errors.hpp"

namespace sigmmd {

namespace {

void check_finite(const std::vector<double>& xs, const char* who) {
    for (double x : xs) {
        if (!std::isfinite(x)) throw invalid_input(std::string(who) + ": non-finite input");
    }
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

MomentReport moments(const std::vector<double>& returns) {
    if (returns.size() < 4) throw invalid_input("moments: need at least 4 returns");
    check_finite(returns, "moments");
    const double n = static_cast<double>(returns.size());
    const double rbar = mean_of(returns);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double r : returns) {
        const double c = r - rbar;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // constant input leaves rounding residue of order (eps * rbar)^2
    if (m2 <= 1e-28 * rbar * rbar) m2 = 0.0;

    MomentReport out;
    out.ann_return = 252.0 * rbar;
    out.volatility = std::sqrt(252.0 * m2);
    if (m2 > 0.0) {
        out.skew = m3 / std::pow(m2, 1.5);
        out.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag, bool squared) {
    if (max_lag == 0) throw invalid_input("acf: max_lag must be positive");
    if (series.size() <= max_lag + 1) throw invalid_input("acf: series shorter than max_lag + 2");
    check_finite(series, "acf");

    std::vector<double> xs = series;
    if (squared) {
        for (double& x : xs) x *= x;
    }
    const double mu = mean_of(xs);
    const double n = static_cast<double>(xs.size());
    double c0 = 0.0;
    for (double x : xs) c0 += (x - mu) * (x - mu);
    c0 /= n;
    if (!(c0 > 0.0)) throw invalid_input("acf: constant series has no correlation");

    std::vector<double> out(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t t = 0; t + lag < xs.size(); ++t) c += (xs[t] - mu) * (xs[t + lag] - mu);
        out[lag - 1] = c / n / c0;
    }
    return out;
}

std::vector<double> leverage_corr(const std::vector<double>& returns, std::size_t max_lag) {
    if (max_lag == 0) throw invalid_input("leverage_corr: max_lag must be positive");
    if (returns.size() <= max_lag + 1)
        throw invalid_input("leverage_corr: series shorter than max_lag + 2");
    check_finite(returns, "leverage_corr");

    std::vector<double> out(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const std::size_t m = returns.size() - lag;
        double ma = 0.0, mb = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            ma += returns[t];
            mb += returns[t + lag] * returns[t + lag];
        }
        ma /= static_cast<double>(m);
        mb /= static_cast<double>(m);
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            const double a = returns[t] - ma;
            const double b = returns[t + lag] * returns[t + lag] - mb;
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        if (!(saa > 0.0) || !(sbb > 0.0))
            throw invalid_input("leverage_corr: constant series has no correlation");
        out[lag - 1] = sab / std::sqrt(saa * sbb);
    }
    return out;
}

AggregatedCurve aggregate_curves(const std::vector<std::vector<double>>& curves) {
    if (curves.empty()) throw invalid_input("aggregate_curves: empty batch");
    const std::size_t len = curves.front().size();
    for (const auto& c : curves) {
        if (c.size() != len) throw invalid_input("aggregate_curves: ragged batch");
    }
    AggregatedCurve out;
    out.mean.assign(len, 0.0);
    out.mad.assign(len, 0.0);
    const double n = static_cast<double>(curves.size());
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < len; ++i) out.mean[i] += c[i];
    }
    for (double& m : out.mean) m /= n;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < len; ++i) out.mad[i] += std::fabs(c[i] - out.mean[i]);
    }
    for (double& m : out.mad) m /= n;
    return out;
}

MeanSd mean_sd(const std::vector<double>& xs) {
    if (xs.empty()) throw invalid_input("mean_sd: empty sample");
    MeanSd out;
    out.mean = mean_of(xs);
    double v = 0.0;
    for (double x : xs) v += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(v / static_cast<double>(xs.size()));
    return out;
}

std::vector<GainLossPoint> gain_loss_ratio(const std::vector<double>& returns,
                                           const std::vector<double>& thresholds) {
    if (returns.empty()) throw invalid_input("gain_loss_ratio: empty returns");
    check_finite(returns, "gain_loss_ratio");
    std::vector<GainLossPoint> out;
    out.reserve(thresholds.size());
    for (double th : thresholds) {
        if (!(th >= 0.0)) throw invalid_input("gain_loss_ratio: negative threshold");
        GainLossPoint pt;
        pt.threshold = th;
        std::size_t pos = 0;
        for (double r : returns) {
            if (std::fabs(r) > th) {
                ++pt.exceedances;
                if (r > 0.0) ++pos;
            }
        }
        pt.low_confidence = pt.exceedances < 30;
        if (pt.exceedances > 0)
            pt.ratio = static_cast<double>(pos) / static_cast<double>(pt.exceedances);
        out.push_back(pt);
    }
    return out;
}

std::vector<double> gain_loss_grid(const std::vector<double>& returns, std::size_t n_points) {
    if (returns.empty()) throw invalid_input("gain_loss_grid: empty returns");
    if (n_points < 2) throw invalid_input("gain_loss_grid: need at least 2 points");
    std::vector<double> abs(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) abs[i] = std::fabs(returns[i]);
    std::sort(abs.begin(), abs.end());
    const double pos = 0.95 * static_cast<double>(abs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double p95 = lo + 1 < abs.size() ? abs[lo] + frac * (abs[lo + 1] - abs[lo]) : abs[lo];

    std::vector<double> grid(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        grid[i] = p95 * static_cast<double>(i) / static_cast<double>(n_points - 1);
    }
    return grid;
}

std::vector<double> endpoint_summary(const std::vector<LogPath>& paths) {
    if (paths.empty()) throw invalid_input("endpoint_summary: empty batch");
    std::vector<double> out(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        paths[i].validate();
        out[i] = std::exp(paths[i].values.back() - paths[i].values.front());
    }
    return out;
}

}  // namespace sigmmd
