#include "sigmmd/heston.hpp"

#include <algorithm>
#include <cmath>

#include "sigmmd/errors.hpp"
#include "sigmmd/parallel.hpp"

namespace sigmmd {

void HestonParams::validate() const {
    if (!(v0 > 0.0)) throw invalid_input("heston: v0 must be positive");
    if (!(std::fabs(rho) <= 1.0)) throw invalid_input("heston: |rho| must be <= 1");
    if (kappa < 0.0 || theta < 0.0 || sigma < 0.0)
        throw invalid_input("heston: kappa, theta, sigma must be >= 0");
    for (double x : {mu, kappa, theta, sigma, rho, v0}) {
        if (!std::isfinite(x)) throw invalid_input("heston: non-finite parameter");
    }
}

HestonParams HestonParams::iid_surrogate() const {
    HestonParams out = *this;
    out.kappa = 1e-9;
    out.sigma = 1e-9;
    out.theta = v0;
    return out;
}

std::pair<double, double> correlated_normals(Rng& rng, double rho) {
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    return {e1, rho * e1 + std::sqrt(1.0 - rho * rho) * e2};
}

namespace {

// one path of n_steps Euler updates; logs and vars point at n_steps+1 slots
void simulate_one(const HestonParams& p, std::size_t n_steps, double dt, Rng& rng, double* logs,
                  double* vars) {
    const double sdt = std::sqrt(dt);
    double x = 0.0;
    double v = p.v0;
    logs[0] = x;
    vars[0] = v;
    for (std::size_t t = 0; t < n_steps; ++t) {
        const auto [e1, e2] = correlated_normals(rng, p.rho);
        const double vp = std::max(v, 0.0);
        const double sv = std::sqrt(vp);
        x += (p.mu - 0.5 * vp) * dt + sv * sdt * e1;
        v += p.kappa * (p.theta - vp) * dt + p.sigma * sv * sdt * e2;
        logs[t + 1] = x;
        vars[t + 1] = std::max(v, 0.0);
    }
}

}  // namespace

HestonBatch heston_simulate(const HestonParams& params, std::size_t n_steps, double dt,
                            std::size_t n_paths, std::uint64_t seed, int threads) {
    params.validate();
    if (!(dt > 0.0)) throw invalid_input("heston: dt must be positive");
    if (n_steps == 0 || n_paths == 0) throw invalid_input("heston: empty simulation");

    HestonBatch batch;
    batch.log_prices.resize(n_paths, n_steps + 1);
    batch.variances.resize(n_paths, n_steps + 1);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        simulate_one(params, n_steps, dt, rng, &batch.log_prices(i, 0), &batch.variances(i, 0));
    });
    return batch;
}

std::vector<Matrix> heston_noise(const HestonParams& params, std::size_t n_steps, double dt,
                                 std::size_t n_tensors, std::size_t d_z, std::uint64_t seed,
                                 int threads) {
    params.validate();
    if (params.mu != 0.0) throw invalid_input("heston_noise: drift must be zero");
    if (!(dt > 0.0)) throw invalid_input("heston_noise: dt must be positive");
    if (n_steps == 0 || n_tensors == 0 || d_z == 0)
        throw invalid_input("heston_noise: empty request");

    std::vector<Matrix> out(n_tensors, Matrix(n_steps, d_z));
    const double scale = 1.0 / std::sqrt(dt * params.v0);
    parallel_for(n_tensors * d_z, threads, [&](std::size_t idx) {
        const std::size_t b = idx / d_z;
        const std::size_t j = idx % d_z;
        Rng rng = Rng::stream(seed, idx);
        std::vector<double> logs(n_steps + 1), vars(n_steps + 1);
        simulate_one(params, n_steps, dt, rng, logs.data(), vars.data());
        for (std::size_t t = 0; t < n_steps; ++t) {
            out[b](t, j) = (logs[t + 1] - logs[t]) * scale;
        }
    });
    return out;
}

}  // namespace sigmmd
