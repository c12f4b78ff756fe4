#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "sigmmd/dataset.hpp"
#include "sigmmd/errors.hpp"

using namespace sigmmd;

namespace {

struct TempCsv {
    std::filesystem::path path;

    explicit TempCsv(const std::string& body) {
        path = std::filesystem::temp_directory_path() /
               ("sigmmd_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".csv");
        std::ofstream out(path);
        out << body;
    }
    ~TempCsv() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("iso dates parse to day numbers") {
    CHECK(parse_iso_date("1970-01-01") == 0);
    CHECK(parse_iso_date("1970-01-02") == 1);
    CHECK(parse_iso_date("1969-12-31") == -1);
    CHECK(parse_iso_date("2018-09-18") - parse_iso_date("2018-09-11") == 7);
    CHECK_THROWS_AS(parse_iso_date("2018/09/18"), data_error);
    CHECK_THROWS_AS(parse_iso_date("2018-02-30"), data_error);
    CHECK_THROWS_AS(parse_iso_date("18 Sep 2018"), data_error);
    CHECK_THROWS_AS(parse_iso_date("2018-09-18x"), data_error);
}

TEST_CASE("three-row file yields log closes") {
    TempCsv csv("Date,Close\n1995-01-03,100\n1995-01-04,101\n1995-01-05,102\n");
    const Dataset d = ingest_csv(csv.path.string());
    REQUIRE(d.size() == 3);
    CHECK(d.log_prices[0] == doctest::Approx(std::log(100.0)).epsilon(1e-15));
    CHECK(d.log_prices[1] == doctest::Approx(std::log(101.0)).epsilon(1e-15));
    CHECK(d.log_prices[2] == doctest::Approx(std::log(102.0)).epsilon(1e-15));
    REQUIRE(d.dts.size() == 2);
    CHECK(d.dts[0] == doctest::Approx(1.0 / 365.0).epsilon(1e-15));
}

TEST_CASE("friday to monday spans three calendar days") {
    TempCsv csv("Date,Close\n2018-09-14,100\n2018-09-17,101\n");
    const Dataset d = ingest_csv(csv.path.string());
    REQUIRE(d.dts.size() == 1);
    CHECK(d.dts[0] == doctest::Approx(3.0 / 365.0).epsilon(1e-15));
}

TEST_CASE("yahoo-style extra columns and CRLF endings are accepted") {
    TempCsv csv("Date,Open,High,Low,Close,Adj Close,Volume\r\n"
                "2020-03-02,1,2,0.5,100.25,99.9,12345\r\n"
                "2020-03-03,1,2,0.5,101.5,100.3,23456\r\n");
    const Dataset d = ingest_csv(csv.path.string());
    REQUIRE(d.size() == 2);
    CHECK(d.closes[0] == 100.25);
    CHECK(d.closes[1] == 101.5);
}

TEST_CASE("header match is case-insensitive") {
    TempCsv csv("DATE,CLOSE\n2020-01-02,5\n2020-01-03,6\n");
    CHECK(ingest_csv(csv.path.string()).size() == 2);
}

TEST_CASE("rejections carry line numbers") {
    TempCsv zero("Date,Close\n2020-01-02,5\n2020-01-03,0\n");
    try {
        ingest_csv(zero.path.string());
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    TempCsv bad_float("Date,Close\n2020-01-02,abc\n");
    try {
        ingest_csv(bad_float.path.string());
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    TempCsv bad_date("Date,Close\n2020-13-40,5\n");
    try {
        ingest_csv(bad_date.path.string());
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("duplicate and unsorted dates are rejected") {
    TempCsv dup("Date,Close\n2020-01-02,5\n2020-01-02,6\n");
    CHECK_THROWS_WITH_AS(ingest_csv(dup.path.string()),
                         "dataset: duplicate date '2020-01-02'", data_error);

    TempCsv unsorted("Date,Close\n2020-01-03,5\n2020-01-02,6\n");
    CHECK_THROWS_AS(ingest_csv(unsorted.path.string()), data_error);
}

TEST_CASE("missing columns and empty files are rejected") {
    TempCsv no_close("Date,Value\n2020-01-02,5\n");
    CHECK_THROWS_AS(ingest_csv(no_close.path.string()), data_error);

    TempCsv empty("");
    CHECK_THROWS_AS(ingest_csv(empty.path.string()), data_error);

    TempCsv header_only("Date,Close\n");
    CHECK_THROWS_AS(ingest_csv(header_only.path.string()), data_error);

    CHECK_THROWS_AS(ingest_csv("/nonexistent/path.csv"), data_error);
}

TEST_CASE("split keeps the boundary date on the training side") {
    const Dataset d = make_dataset(
        {"2018-09-14", "2018-09-17", "2018-09-18", "2018-09-19", "2018-09-20"},
        {100, 101, 102, 103, 104});
    const SplitDataset s = split_by_date(d, "2018-09-18");
    REQUIRE(s.train.size() == 3);
    REQUIRE(s.test.size() == 2);
    CHECK(s.train.dates.back() == "2018-09-18");
    CHECK(s.test.dates.front() == "2018-09-19");
    REQUIRE(s.test.dts.size() == 1);
    CHECK(s.test.dts[0] == doctest::Approx(1.0 / 365.0).epsilon(1e-15));
}

TEST_CASE("make_dataset validates shape and positivity") {
    CHECK_THROWS_AS(make_dataset({"2020-01-02"}, {1.0, 2.0}), data_error);
    CHECK_THROWS_AS(make_dataset({"2020-01-02"}, {-1.0}), data_error);
    CHECK_THROWS_AS(make_dataset({"2020-01-03", "2020-01-02"}, {1.0, 2.0}), data_error);
}
