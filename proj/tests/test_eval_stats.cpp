#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "sigmmd/errors.hpp"
#include "sigmmd/eval_stats.hpp"
#include "sigmmd/heston.hpp"
#include "sigmmd/rng.hpp"

using namespace sigmmd;

TEST_CASE("moments on the alternating example") {
    const std::vector<double> r{0.01, -0.01, 0.01, -0.01};
    const MomentReport m = moments(r);
    CHECK(m.ann_return == 0.0);
    CHECK(m.volatility == doctest::Approx(std::sqrt(252.0 * 1e-4)).epsilon(1e-15));
    CHECK(m.volatility == doctest::Approx(0.15874507866387544).epsilon(1e-14));
    REQUIRE(m.skew.has_value());
    REQUIRE(m.kurtosis.has_value());
    CHECK(*m.skew == 0.0);
    CHECK(*m.kurtosis == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("moments on a constant series") {
    const std::vector<double> r(12, 0.003);
    const MomentReport m = moments(r);
    CHECK(m.ann_return == doctest::Approx(252.0 * 0.003).epsilon(1e-14));
    CHECK(m.volatility == 0.0);
    CHECK_FALSE(m.skew.has_value());
    CHECK_FALSE(m.kurtosis.has_value());
    CHECK_THROWS_AS(moments(std::vector<double>{0.1, 0.2}), invalid_input);
}

TEST_CASE("moments are permutation invariant") {
    Rng rng(3);
    std::vector<double> r(500);
    for (double& x : r) x = 0.01 * rng.normal() + 0.0002;
    std::vector<double> shuffled = r;
    rng.shuffle(shuffled);
    const MomentReport a = moments(r);
    const MomentReport b = moments(shuffled);
    CHECK(a.ann_return == doctest::Approx(b.ann_return).epsilon(1e-12));
    CHECK(a.volatility == doctest::Approx(b.volatility).epsilon(1e-12));
    CHECK(*a.skew == doctest::Approx(*b.skew).epsilon(1e-10));
    CHECK(*a.kurtosis == doctest::Approx(*b.kurtosis).epsilon(1e-10));
}

TEST_CASE("acf matches a hand-computed series") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> rho = acf(x, 2, false);
    REQUIRE(rho.size() == 2);
    CHECK(rho[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(rho[1] == doctest::Approx(-0.3).epsilon(1e-14));
}

TEST_CASE("acf of iid noise stays inside the white-noise band") {
    Rng rng(7);
    std::vector<double> x(10000);
    for (double& v : x) v = rng.normal();
    const std::vector<double> rho = acf(x, 100, false);
    const double band = 3.0 / std::sqrt(10000.0);
    std::size_t violations = 0;
    for (double r : rho) {
        if (std::fabs(r) > band) ++violations;
    }
    CHECK(violations <= 1);
}

TEST_CASE("acf of an alternating series is minus one at lag one") {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 == 0 ? 0.02 : -0.02;
    const std::vector<double> rho = acf(x, 1, false);
    CHECK(rho[0] == doctest::Approx(-1.0).epsilon(0.002));
}

TEST_CASE("squared flag equals squaring the series first") {
    Rng rng(9);
    std::vector<double> x(300), sq(300);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        sq[i] = x[i] * x[i];
    }
    CHECK(acf(x, 5, true) == acf(sq, 5, false));
}

TEST_CASE("squared-return acf of a conditional-variance process is positive and decays") {
    Rng rng(11);
    std::vector<double> z;
    double prev = 1.0;
    for (int t = 0; t < 20500; ++t) {
        const double s2 = 0.1 + 0.9 * prev * prev;
        prev = std::sqrt(s2) * rng.normal();
        if (t >= 500) z.push_back(prev);
    }
    const std::vector<double> rho = acf(z, 10, true);
    for (double r : rho) CHECK(r > 0.0);
    const double head = (rho[0] + rho[1] + rho[2]) / 3.0;
    const double tail = (rho[7] + rho[8] + rho[9]) / 3.0;
    CHECK(head > tail);
}

TEST_CASE("acf input validation") {
    CHECK_THROWS_AS(acf(std::vector<double>(50, 1.0), 3, false), invalid_input);
    CHECK_THROWS_AS(acf(std::vector<double>{1.0, 2.0, 3.0}, 2, false), invalid_input);
    CHECK_THROWS_AS(acf(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 0, false), invalid_input);
}

TEST_CASE("curve aggregation: mean and mean absolute deviation") {
    const AggregatedCurve agg = aggregate_curves({{0.0, 1.0}, {1.0, 0.0}});
    CHECK(agg.mean == std::vector<double>{0.5, 0.5});
    CHECK(agg.mad == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(aggregate_curves({}), invalid_input);
    CHECK_THROWS_AS(aggregate_curves({{1.0}, {1.0, 2.0}}), invalid_input);

    const MeanSd ms = mean_sd({1.0, 3.0});
    CHECK(ms.mean == 2.0);
    CHECK(ms.sd == 1.0);
}

TEST_CASE("gain loss ratio on symmetric and one-sided samples") {
    std::vector<double> sym;
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
        const double v = std::fabs(rng.normal()) + 0.001;
        sym.push_back(v);
        sym.push_back(-v);
    }
    for (const GainLossPoint& pt : gain_loss_ratio(sym, {0.0, 0.5, 1.0})) {
        REQUIRE(pt.ratio.has_value());
        CHECK(*pt.ratio == 0.5);
        CHECK(*pt.ratio >= 0.0);
        CHECK(*pt.ratio <= 1.0);
    }

    std::vector<double> pos(200, 0.01);
    const auto up = gain_loss_ratio(pos, {0.0, 0.005});
    CHECK(*up[0].ratio == 1.0);
    CHECK(*up[1].ratio == 1.0);
    CHECK_FALSE(up[0].low_confidence);

    const auto sparse = gain_loss_ratio(pos, {0.02});
    CHECK(sparse[0].exceedances == 0);
    CHECK_FALSE(sparse[0].ratio.has_value());
    CHECK(sparse[0].low_confidence);

    CHECK_THROWS_AS(gain_loss_ratio(pos, {-0.1}), invalid_input);
}

TEST_CASE("gain loss grid ends at the 95th percentile of absolute returns") {
    std::vector<double> r(101);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = static_cast<double>(i) * 0.001 * (i % 2 == 0 ? 1.0 : -1.0);
    }
    const std::vector<double> grid = gain_loss_grid(r, 11);
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == doctest::Approx(0.095).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("leverage correlation of iid returns is near zero") {
    Rng rng(17);
    std::vector<double> r(20000);
    for (double& x : r) x = rng.normal();
    for (double c : leverage_corr(r, 5)) CHECK(std::fabs(c) < 0.03);
    CHECK(leverage_corr(r, 5).size() == 5);
    CHECK_THROWS_AS(leverage_corr(std::vector<double>(30, 2.0), 3), invalid_input);
}

TEST_CASE("leverage correlation is negative for negatively correlated volatility") {
    HestonParams p;
    const HestonBatch batch = heston_simulate(p, 250, 1.0 / 252.0, 400, 19);
    std::vector<std::vector<double>> curves;
    for (std::size_t i = 0; i < 400; ++i) {
        std::vector<double> r(250);
        for (std::size_t t = 0; t < 250; ++t) {
            r[t] = batch.log_prices(i, t + 1) - batch.log_prices(i, t);
        }
        curves.push_back(leverage_corr(r, 3));
    }
    const AggregatedCurve agg = aggregate_curves(curves);
    CHECK(agg.mean[0] < -0.02);
}

TEST_CASE("endpoint summary") {
    LogPath flat;
    flat.times = {0.0, 1.0, 2.0};
    flat.values = {0.3, 0.3, 0.3};
    LogPath up;
    up.times = {0.0, 1.0};
    up.values = {0.2, 0.3};
    const std::vector<double> ends = endpoint_summary({flat, up});
    CHECK(ends[0] == 1.0);
    CHECK(ends[1] == doctest::Approx(std::exp(0.1)).epsilon(1e-14));
    CHECK(ends[1] == doctest::Approx(1.1051709180756477).epsilon(1e-14));
    CHECK_THROWS_AS(endpoint_summary({}), invalid_input);
}
