#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "sigmmd/errors.hpp"
#include "sigmmd/heston.hpp"
#include "sigmmd/rng.hpp"

using namespace sigmmd;

TEST_CASE("benchmark defaults") {
    const HestonParams p;
    CHECK(p.mu == 0.2);
    CHECK(p.kappa == 1.0);
    CHECK(p.theta == 0.25);
    CHECK(p.sigma == 0.7);
    CHECK(p.rho == -0.7);
    CHECK(p.v0 == 0.09);
    p.validate();

    const HestonParams iid = p.iid_surrogate();
    CHECK(iid.kappa == 1e-9);
    CHECK(iid.sigma == 1e-9);
    CHECK(iid.theta == iid.v0);
    CHECK(iid.mu == p.mu);
}

TEST_CASE("parameter validation") {
    HestonParams p;
    p.v0 = 0.0;
    CHECK_THROWS_AS(p.validate(), invalid_input);
    p = HestonParams{};
    p.rho = -1.2;
    CHECK_THROWS_AS(p.validate(), invalid_input);
    p = HestonParams{};
    p.sigma = -0.1;
    CHECK_THROWS_AS(p.validate(), invalid_input);
    CHECK_THROWS_AS(heston_simulate(HestonParams{}, 10, 0.0, 4, 1), invalid_input);
    CHECK_THROWS_AS(heston_simulate(HestonParams{}, 0, 0.1, 4, 1), invalid_input);
}

TEST_CASE("correlated normal pairs hit the requested correlation") {
    for (double rho : {0.0, -0.7}) {
        Rng rng(17);
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto [a, b] = correlated_normals(rng, rho);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
        }
        const double mx = sx / n, my = sy / n;
        const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
        const double corr = (sxy / n - mx * my) / std::sqrt(vx * vy);
        CHECK(corr == doctest::Approx(rho).epsilon(0.02).scale(1.0));
        CHECK(vx == doctest::Approx(1.0).epsilon(0.02));
        CHECK(vy == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("degenerate parameters freeze the variance and gaussianize increments") {
    HestonParams p;
    p.sigma = 0.0;
    p.kappa = 0.0;
    const double dt = 1.0 / 252.0;
    const HestonBatch batch = heston_simulate(p, 250, dt, 400, 3);
    for (std::size_t i = 0; i < 400; ++i) {
        for (std::size_t t = 0; t <= 250; ++t) CHECK(batch.variances(i, t) == p.v0);
    }

    // increments are N((mu - v0/2) dt, v0 dt)
    double m = 0.0, v = 0.0;
    std::vector<double> incs;
    for (std::size_t i = 0; i < 400; ++i) {
        for (std::size_t t = 0; t < 250; ++t) {
            incs.push_back(batch.log_prices(i, t + 1) - batch.log_prices(i, t));
        }
    }
    for (double x : incs) m += x;
    m /= static_cast<double>(incs.size());
    for (double x : incs) v += (x - m) * (x - m);
    v /= static_cast<double>(incs.size());
    const double want_mean = (p.mu - 0.5 * p.v0) * dt;
    const double want_var = p.v0 * dt;
    const double se_mean = std::sqrt(want_var / incs.size());
    CHECK(std::fabs(m - want_mean) < 3.0 * se_mean);
    CHECK(v == doctest::Approx(want_var).epsilon(0.02));
}

TEST_CASE("simulation is deterministic and thread-count independent") {
    const HestonParams p;
    const HestonBatch a = heston_simulate(p, 50, 1.0 / 252.0, 32, 11, 1);
    const HestonBatch b = heston_simulate(p, 50, 1.0 / 252.0, 32, 11, 4);
    const HestonBatch c = heston_simulate(p, 50, 1.0 / 252.0, 32, 12, 1);
    REQUIRE(a.log_prices.same_shape(b.log_prices));
    bool equal = true, differs = false;
    for (std::size_t i = 0; i < a.log_prices.size(); ++i) {
        equal = equal && a.log_prices[i] == b.log_prices[i] && a.variances[i] == b.variances[i];
        differs = differs || a.log_prices[i] != c.log_prices[i];
    }
    CHECK(equal);
    CHECK(differs);
}

TEST_CASE("variance paths stay non-negative near the positivity boundary") {
    const HestonParams p;  // 2 kappa theta barely above sigma^2
    const HestonBatch batch = heston_simulate(p, 250, 1.0 / 252.0, 500, 29);
    double vmin = 1.0;
    for (std::size_t i = 0; i < batch.variances.size(); ++i) {
        vmin = std::min(vmin, batch.variances[i]);
    }
    CHECK(vmin >= 0.0);
    CHECK(vmin < 0.01);  // the boundary is actually visited
}

TEST_CASE("variance mean reverts to theta") {
    const HestonParams p;
    const std::size_t steps = 1260;  // five mean-reversion times at kappa = 1
    const HestonBatch batch = heston_simulate(p, steps, 1.0 / 252.0, 4000, 31);
    double m = 0.0;
    for (std::size_t i = 0; i < 4000; ++i) m += batch.variances(i, steps);
    m /= 4000.0;
    const double expect = p.theta + (p.v0 - p.theta) * std::exp(-5.0);
    CHECK(std::fabs(m - expect) < 0.015);
}

TEST_CASE("noise tensors: shape, scaling, determinism") {
    HestonParams p;
    p.mu = 0.0;
    const double dt = 1.0 / 252.0;
    const auto tensors = heston_noise(p, 50, dt, 3, 2, 77);
    REQUIRE(tensors.size() == 3);
    for (const Matrix& t : tensors) {
        CHECK(t.rows() == 50);
        CHECK(t.cols() == 2);
    }
    CHECK(tensors[0](0, 0) != tensors[0](0, 1));
    CHECK(tensors[0](0, 0) != tensors[1](0, 0));

    const auto again = heston_noise(p, 50, dt, 3, 2, 77);
    bool equal = true;
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t i = 0; i < tensors[b].size(); ++i) {
            equal = equal && tensors[b][i] == again[b][i];
        }
    }
    CHECK(equal);

    CHECK_THROWS_AS(heston_noise(HestonParams{}, 50, dt, 3, 2, 77), invalid_input);
}

TEST_CASE("first-step noise variance is one under the benchmark parameters") {
    HestonParams p;
    p.mu = 0.0;
    const double dt = 1.0 / 252.0;
    const auto tensors = heston_noise(p, 2, dt, 50000, 1, 101);
    double m = 0.0, v = 0.0;
    for (const Matrix& t : tensors) m += t(0, 0);
    m /= static_cast<double>(tensors.size());
    for (const Matrix& t : tensors) v += (t(0, 0) - m) * (t(0, 0) - m);
    v /= static_cast<double>(tensors.size());
    CHECK(std::fabs(v - 1.0) < 3.0 * std::sqrt(2.0 / 50000.0));
}

TEST_CASE("iid surrogate noise is standard normal with the analytic drift") {
    HestonParams p;
    p.mu = 0.0;
    const HestonParams iid = p.iid_surrogate();
    const double dt = 1.0 / 252.0;
    const std::size_t steps = 250;
    const auto tensors = heston_noise(iid, steps, dt, 400, 1, 55);
    std::vector<double> zs;
    for (const Matrix& t : tensors) {
        for (std::size_t i = 0; i < steps; ++i) zs.push_back(t(i, 0));
    }
    double m = 0.0, v = 0.0;
    for (double z : zs) m += z;
    m /= static_cast<double>(zs.size());
    for (double z : zs) v += (z - m) * (z - m);
    v /= static_cast<double>(zs.size());

    const double analytic_mean = -0.5 * std::sqrt(p.v0 * dt);
    CHECK(std::fabs(analytic_mean) < 0.01);
    CHECK(std::fabs(m - analytic_mean) < 3.0 / std::sqrt(static_cast<double>(zs.size())));
    CHECK(v == doctest::Approx(1.0).epsilon(0.02));

    // same seed, same epsilon draws: the full model differs only through v
    const auto full = heston_noise(p, steps, dt, 400, 1, 55);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t b = 0; b < 400; ++b) {
        for (std::size_t i = 0; i < steps; ++i) {
            sxy += tensors[b](i, 0) * full[b](i, 0);
            sxx += tensors[b](i, 0) * tensors[b](i, 0);
            syy += full[b](i, 0) * full[b](i, 0);
        }
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 0.5);
}
