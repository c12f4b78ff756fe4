#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sigmmd/errors.hpp"
#include "sigmmd/paths.hpp"

using namespace sigmmd;

namespace {
const double kDay = 1.0 / 365.0;
}

TEST_CASE("log_returns direct differencing") {
    LogPath p{{0.0, kDay, 2 * kDay}, {0.0, 1.0, 3.0}};
    const ReturnSeries rs = log_returns(p);
    REQUIRE(rs.returns.size() == 2);
    CHECK(rs.returns[0] == 1.0);
    CHECK(rs.returns[1] == 2.0);
    CHECK(rs.dt[0] == doctest::Approx(kDay));
    CHECK(rs.dt[1] == doctest::Approx(kDay));
}

TEST_CASE("log_returns constant path") {
    LogPath p{{0.0, kDay, 2 * kDay}, {5.0, 5.0, 5.0}};
    const ReturnSeries rs = log_returns(p);
    CHECK(rs.returns[0] == 0.0);
    CHECK(rs.returns[1] == 0.0);
}

TEST_CASE("weekend gap keeps calendar dt") {
    // Friday close to Monday close: 3 calendar days
    LogPath p{{0.0, 3 * kDay}, {0.1, 0.2}};
    const ReturnSeries rs = log_returns(p);
    CHECK(rs.dt[0] == doctest::Approx(3 * kDay));
}

TEST_CASE("log_returns rejects short paths") {
    CHECK_THROWS_AS(log_returns(LogPath{{0.0}, {1.0}}), invalid_input);
}

TEST_CASE("lead lag time augment basic") {
    LogPath p{{0.0, kDay, 2 * kDay}, {0.0, 1.0, 3.0}};
    const AugmentedPath a = lead_lag_time_augment(p, 1);
    CHECK(a.t == std::vector<double>{0.0, kDay, 2 * kDay, 2 * kDay});
    CHECK(a.lead == std::vector<double>{0.0, 1.0, 3.0, 3.0});
    CHECK(a.lag == std::vector<double>{0.0, 0.0, 1.0, 3.0});
}

TEST_CASE("lead lag single increment") {
    LogPath p{{0.0, kDay}, {0.0, 2.0}};
    const AugmentedPath a = lead_lag_time_augment(p, 1);
    CHECK(a.t == std::vector<double>{0.0, kDay, kDay});
    CHECK(a.lead == std::vector<double>{0.0, 2.0, 2.0});
    CHECK(a.lag == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("augmentation start-normalizes values") {
    LogPath p{{1.0, 1.0 + kDay, 1.0 + 2 * kDay}, {7.0, 8.0, 10.0}};
    const AugmentedPath a = lead_lag_time_augment(p, 1);
    CHECK(a.lead == std::vector<double>{0.0, 1.0, 3.0, 3.0});
    CHECK(a.t.front() == 0.0);
}

TEST_CASE("augment rejects lag below one") {
    LogPath p{{0.0, kDay}, {0.0, 1.0}};
    CHECK_THROWS_AS(lead_lag_time_augment(p, 0), invalid_input);
}

TEST_CASE("lag two pads two zeros") {
    LogPath p{{0.0, kDay, 2 * kDay}, {0.0, 1.0, 3.0}};
    const AugmentedPath a = lead_lag_time_augment(p, 2);
    REQUIRE(a.size() == 5);
    CHECK(a.lag == std::vector<double>{0.0, 0.0, 0.0, 1.0, 3.0});
    CHECK(a.lead == std::vector<double>{0.0, 1.0, 3.0, 3.0, 3.0});
}

TEST_CASE("returns then cumulative sum reconstructs normalized values") {
    LogPath p{{0.0, kDay, 3 * kDay, 4 * kDay}, {2.0, 2.5, 1.75, 3.0}};
    const ReturnSeries rs = log_returns(p);
    const LogPath norm = start_normalize(p);
    double acc = 0.0;
    for (std::size_t i = 0; i < rs.returns.size(); ++i) {
        acc += rs.returns[i];
        CHECK(acc == doctest::Approx(norm.values[i + 1]).epsilon(1e-15));
    }
}

TEST_CASE("time augment two channels") {
    LogPath p{{1.0, 1.0 + kDay}, {3.0, 4.0}};
    const Matrix m = time_augment(p);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 0.0);
    CHECK(m(0, 1) == doctest::Approx(kDay));
    CHECK(m(1, 1) == 1.0);
}

TEST_CASE("sample_segments stride grid") {
    const auto segs = sample_segments(12, 8, 2);
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].start_index == 0);
    CHECK(segs[1].start_index == 2);
    CHECK(segs[2].start_index == 4);
}

TEST_CASE("sample_segments tiling and boundary") {
    const auto tiling = sample_segments(12, 4, 4);
    REQUIRE(tiling.size() == 3);
    CHECK(tiling[2].start_index == 8);

    const auto single = sample_segments(300, 300, 50);
    REQUIRE(single.size() == 1);
    CHECK(single[0].start_index == 0);

    CHECK(sample_segments(5, 8, 2).empty());
}

TEST_CASE("sample_segments count formula") {
    for (std::size_t len : {20u, 37u, 100u}) {
        for (std::size_t seg : {5u, 8u}) {
            for (std::size_t stride : {1u, 3u, 7u}) {
                const auto segs = sample_segments(len, seg, stride);
                CHECK(segs.size() == (len - seg) / stride + 1);
            }
        }
    }
}

TEST_CASE("augmentation injective on distinct normalized paths") {
    LogPath p{{0.0, kDay, 2 * kDay}, {0.0, 1.0, 2.0}};
    LogPath q{{0.0, kDay, 2 * kDay}, {0.0, 1.0, 2.5}};
    const AugmentedPath ap = lead_lag_time_augment(p, 1);
    const AugmentedPath aq = lead_lag_time_augment(q, 1);
    CHECK(ap.lead != aq.lead);
}
