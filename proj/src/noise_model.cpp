#include "sigmmd/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigmmd/errors.hpp"
#include "sigmmd/rng.hpp"

namespace sigmmd {

void LambertParams::validate() const {
    if (!(sigma > 0.0)) throw invalid_input("lambert: sigma must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw invalid_input("lambert: delta must be finite and >= 0");
}

void MAParams::validate() const {
    if (!(omega > 0.0)) throw invalid_input("ma: omega must be positive");
    if (betas.empty()) throw invalid_input("ma: order must be positive");
    for (double b : betas) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw invalid_input("ma: betas must be >= 0");
    }
}

void NoiseModel::validate() const {
    lambert.validate();
    ma.validate();
    if (gaussianized_history.size() < ma.p())
        throw invalid_input("noise model: history shorter than the MA order");
}

double lambert_forward(double u, const LambertParams& params) {
    params.validate();
    const double U = (u - params.mu) / params.sigma;
    return U * std::exp(0.5 * params.delta * U * U) * params.sigma + params.mu;
}

double lambert_inverse(double v, const LambertParams& params) {
    params.validate();
    if (params.delta == 0.0) return v;
    const double V = (v - params.mu) / params.sigma;
    if (V == 0.0) return params.mu;
    const double target = std::fabs(V);
    const double d = params.delta;

    double u;
    if (target >= std::exp(1.0)) {
        // exp(d/2 u^2) overflows long before the root does, so large inputs
        // solve the equivalent log form ln u + d/2 u^2 = ln target, whose
        // Newton step is well conditioned at any scale
        const double log_t = std::log(target);
        double lo = 0.0, hi = std::sqrt(2.0 * log_t / d) + 1.0;
        u = std::sqrt(2.0 * log_t / d);
        if (!(u > lo) || !(u < hi)) u = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double f = std::log(u) + 0.5 * d * u * u - log_t;
            if (std::fabs(f) <= 1e-15 * (1.0 + log_t)) break;
            if (f > 0.0) hi = u;
            else lo = u;
            if (hi - lo <= 1e-16 * (1.0 + hi)) break;
            double next = u - f / (1.0 / u + d * u);
            if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
            u = next;
        }
    } else {
        // U exp(d/2 U^2) is increasing and >= U on U >= 0, so the root sits
        // in [0, target]; Halley steps are kept inside the shrinking bracket
        // with bisection as the fallback.
        double lo = 0.0, hi = target;
        u = target / (1.0 + 0.5 * d * target * target);
        if (!(u > lo) || !(u < hi)) u = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double e = std::exp(0.5 * d * u * u);
            const double f = u * e - target;
            if (std::fabs(f) <= 1e-15 * (1.0 + target)) break;
            if (f > 0.0) hi = u;
            else lo = u;
            if (hi - lo <= 1e-16 * (1.0 + hi)) break;
            const double fp = e * (1.0 + d * u * u);
            const double fpp = e * d * u * (3.0 + d * u * u);
            const double denom = 2.0 * fp * fp - f * fpp;
            double next = denom != 0.0 ? u - 2.0 * f * fp / denom : 0.5 * (lo + hi);
            if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
            u = next;
        }
    }
    const double U = V > 0.0 ? u : -u;
    return params.mu + params.sigma * U;
}

std::vector<double> annualize(const std::vector<double>& returns, const std::vector<double>& dts) {
    if (returns.size() != dts.size()) throw invalid_input("annualize: length mismatch");
    std::vector<double> out(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) {
        if (!(dts[i] > 0.0)) throw invalid_input("annualize: dts must be positive");
        out[i] = returns[i] / dts[i];
    }
    return out;
}

namespace {

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// population moments; kurtosis here is m4 / m2^2 (not excess)
double kurtosis_of(const std::vector<double>& xs) {
    const double mu = mean_of(xs);
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double c = x - mu;
        const double c2 = c * c;
        m2 += c2;
        m4 += c2 * c2;
    }
    m2 /= static_cast<double>(xs.size());
    m4 /= static_cast<double>(xs.size());
    if (!(m2 > 0.0)) throw invalid_input("kurtosis: zero-variance input");
    return m4 / (m2 * m2);
}

std::vector<double> inverse_all(const std::vector<double>& ys, const LambertParams& params) {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = lambert_inverse(ys[i], params);
    return out;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Standardized standardize(const std::vector<double>& xs) {
    if (xs.size() < 2) throw invalid_input("standardize: need at least two values");
    Standardized out;
    out.mean = mean_of(xs);
    double m2 = 0.0;
    for (double x : xs) m2 += (x - out.mean) * (x - out.mean);
    m2 /= static_cast<double>(xs.size());
    if (!(m2 > 0.0)) throw invalid_input("standardize: zero-variance input");
    out.sd = std::sqrt(m2);
    out.values.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out.values[i] = (xs[i] - out.mean) / out.sd;
    return out;
}

GaussianizeResult gaussianize(const std::vector<double>& r_z) {
    if (r_z.size() < 16) throw invalid_input("gaussianize: need at least 16 observations");
    for (double x : r_z) {
        if (!std::isfinite(x)) throw invalid_input("gaussianize: non-finite input");
    }

    LambertParams params;
    params.mu = mean_of(r_z);
    double var = 0.0;
    for (double x : r_z) var += (x - params.mu) * (x - params.mu);
    var /= static_cast<double>(r_z.size());
    if (!(var > 0.0)) throw invalid_input("gaussianize: zero-variance input");
    params.sigma = std::sqrt(var);
    params.delta = 0.0;

    GaussianizeResult res;
    bool pinned_high = false;
    for (std::size_t iter = 1; iter <= 200; ++iter) {
        res.iterations = iter;

        LambertParams probe = params;
        probe.delta = 0.0;
        const double kurt0 = kurtosis_of(inverse_all(r_z, probe));
        if (kurt0 <= 3.0) {
            // delta can only lighten tails, so 0 is the boundary optimum
            params.delta = 0.0;
            pinned_high = false;
        } else {
            probe.delta = 5.0;
            const double kurt5 = kurtosis_of(inverse_all(r_z, probe));
            if (kurt5 >= 3.0) {
                params.delta = 5.0;
                pinned_high = true;
            } else {
                double lo = 0.0, hi = 5.0;
                for (int b = 0; b < 60 && hi - lo > 1e-12; ++b) {
                    probe.delta = 0.5 * (lo + hi);
                    if (kurtosis_of(inverse_all(r_z, probe)) > 3.0) lo = probe.delta;
                    else hi = probe.delta;
                }
                params.delta = 0.5 * (lo + hi);
                pinned_high = false;
            }
        }

        std::vector<double> x = inverse_all(r_z, params);
        const double new_mu = mean_of(x);
        double new_var = 0.0;
        for (double xi : x) new_var += (xi - new_mu) * (xi - new_mu);
        new_var /= static_cast<double>(x.size());
        params.mu = new_mu;
        params.sigma = std::sqrt(new_var);

        x = inverse_all(r_z, params);
        res.transformed_kurtosis = kurtosis_of(x);
        const bool at_target = std::fabs(res.transformed_kurtosis - 3.0) < 1e-3;
        const bool at_floor = params.delta == 0.0 && res.transformed_kurtosis < 3.0;
        if (at_target || at_floor) {
            res.r_w = std::move(x);
            res.params = params;
            return res;
        }
    }
    if (pinned_high)
        throw numeric_fault("gaussianize: kurtosis " + std::to_string(res.transformed_kurtosis) +
                            " still above 3 at delta = 5");
    throw numeric_fault("gaussianize: no convergence after 200 iterations, kurtosis " +
                        std::to_string(res.transformed_kurtosis));
}

MAParams fit_ma(const std::vector<double>& z, std::size_t p, const MAFitOptions& opts) {
    return fit_ma_segments({z}, p, opts);
}

MAParams fit_ma_segments(const std::vector<std::vector<double>>& segments, std::size_t p,
                         const MAFitOptions& opts) {
    if (p == 0) throw invalid_input("fit_ma: order must be positive");
    if (segments.empty()) throw invalid_input("fit_ma: no data");
    std::size_t total = 0, usable = 0;
    double m2 = 0.0;
    for (const auto& seg : segments) {
        total += seg.size();
        if (seg.size() > p) usable += seg.size() - p;
        for (double v : seg) {
            if (!std::isfinite(v)) throw invalid_input("fit_ma: non-finite input");
            m2 += v * v;
        }
    }
    if (total <= 10 * p) throw invalid_input("fit_ma: need more than 10*p observations");
    if (usable == 0) throw invalid_input("fit_ma: every segment shorter than the order");
    m2 /= static_cast<double>(total);
    if (!(m2 > 0.0)) throw invalid_input("fit_ma: zero-variance input");

    std::vector<std::vector<double>> sq(segments.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
        sq[s].resize(segments[s].size());
        for (std::size_t t = 0; t < segments[s].size(); ++t)
            sq[s][t] = segments[s][t] * segments[s][t];
    }

    // omega = softplus(theta[0]), beta_i = softplus(theta[i]); minimize the
    // mean Gaussian conditional NLL over all usable time points
    std::vector<double> theta(p + 1);
    theta[0] = softplus_inv(0.5 * m2);
    for (std::size_t i = 1; i <= p; ++i) theta[i] = softplus_inv(std::max(0.4 * m2 / p, 1e-4));

    std::vector<double> grad(p + 1), madam(p + 1, 0.0), vadam(p + 1, 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double inv_n = 1.0 / static_cast<double>(usable);
    double gnorm = 0.0;

    const auto eval_grad = [&]() {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double omega = softplus(theta[0]);
        std::vector<double> beta(p);
        for (std::size_t i = 0; i < p; ++i) beta[i] = softplus(theta[i + 1]);
        for (std::size_t s = 0; s < sq.size(); ++s) {
            const auto& q = sq[s];
            for (std::size_t t = p; t < q.size(); ++t) {
                double s2 = omega;
                for (std::size_t i = 0; i < p; ++i) s2 += beta[i] * q[t - 1 - i];
                const double g = 0.5 * (1.0 / s2 - q[t] / (s2 * s2)) * inv_n;
                grad[0] += g;
                for (std::size_t i = 0; i < p; ++i) grad[i + 1] += g * q[t - 1 - i];
            }
        }
        grad[0] *= sigmoid(theta[0]);
        for (std::size_t i = 0; i < p; ++i) grad[i + 1] *= sigmoid(theta[i + 1]);
        gnorm = 0.0;
        for (double g : grad) gnorm = std::max(gnorm, std::fabs(g));
    };

    std::size_t step = 0;
    for (const auto& [lr, steps] : std::vector<std::pair<double, std::size_t>>{
             {0.1, opts.max_steps / 6}, {0.02, opts.max_steps / 3},
             {0.004, opts.max_steps / 4}, {0.001, opts.max_steps / 4}}) {
        for (std::size_t s = 0; s < steps; ++s) {
            eval_grad();
            if (gnorm < opts.grad_tol) break;
            ++step;
            const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
            for (std::size_t i = 0; i <= p; ++i) {
                madam[i] = b1 * madam[i] + (1.0 - b1) * grad[i];
                vadam[i] = b2 * vadam[i] + (1.0 - b2) * grad[i] * grad[i];
                theta[i] -= lr * (madam[i] / corr1) / (std::sqrt(vadam[i] / corr2) + eps);
            }
        }
        if (gnorm < opts.grad_tol) break;
    }
    eval_grad();
    if (gnorm > opts.fail_tol)
        throw numeric_fault("fit_ma: no convergence, gradient norm " + std::to_string(gnorm));

    MAParams out;
    out.omega = softplus(theta[0]);
    out.betas.resize(p);
    for (std::size_t i = 0; i < p; ++i) out.betas[i] = softplus(theta[i + 1]);
    return out;
}

Matrix sample_noise(const NoiseModel& model, std::size_t anchor_index, std::size_t n,
                    std::size_t d_z, std::uint64_t seed) {
    model.validate();
    if (n == 0 || d_z == 0) throw invalid_input("sample_noise: n and d_z must be positive");
    const std::size_t p = model.ma.p();
    if (anchor_index + 1 < p || anchor_index >= model.gaussianized_history.size())
        throw invalid_input("sample_noise: anchor lacks p prior history values");

    // shared history window ending at the anchor, oldest first
    std::vector<double> h0(model.gaussianized_history.begin() + (anchor_index + 1 - p),
                           model.gaussianized_history.begin() + (anchor_index + 1));

    Matrix out(n, d_z);
    for (std::size_t j = 0; j < d_z; ++j) {
        Rng rng = Rng::stream(seed, j);
        std::vector<double> lags = h0;
        for (std::size_t t = 0; t < n; ++t) {
            double s2 = model.ma.omega;
            for (std::size_t i = 0; i < p; ++i) {
                const double zl = lags[lags.size() - 1 - i];
                s2 += model.ma.betas[i] * zl * zl;
            }
            const double z = std::sqrt(s2) * rng.normal();
            out(t, j) = z;
            lags.push_back(z);
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> drawdown_windows(
    const std::vector<double>& log_prices, double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw invalid_input("drawdown_windows: threshold must be in (0,1)");
    // price drop (peak - S)/peak > threshold is log(peak) - log(S) > -log(1-threshold)
    const double log_gap = -std::log1p(-threshold);
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    double peak = -std::numeric_limits<double>::infinity();
    bool open = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < log_prices.size(); ++i) {
        peak = std::max(peak, log_prices[i]);
        const bool down = peak - log_prices[i] > log_gap;
        if (down && !open) {
            open = true;
            start = i;
        } else if (!down && open) {
            open = false;
            windows.emplace_back(start, i);
        }
    }
    if (open) windows.emplace_back(start, log_prices.size());
    return windows;
}

MAParams fit_robust(const std::vector<std::vector<double>>& groups, std::size_t p, bool average,
                    const MAFitOptions& opts) {
    if (groups.empty()) throw invalid_input("fit_robust: empty selection");
    if (!average) return fit_ma_segments(groups, p, opts);

    MAParams acc;
    acc.omega = 0.0;
    acc.betas.assign(p, 0.0);
    for (const auto& g : groups) {
        const MAParams fit = fit_ma(g, p, opts);
        acc.omega += fit.omega;
        for (std::size_t i = 0; i < p; ++i) acc.betas[i] += fit.betas[i];
    }
    const double inv = 1.0 / static_cast<double>(groups.size());
    acc.omega *= inv;
    for (double& b : acc.betas) b *= inv;
    return acc;
}

}  // namespace sigmmd
