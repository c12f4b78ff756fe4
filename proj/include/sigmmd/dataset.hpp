#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sigmmd {

// Daily close series with derived log prices and calendar-day gaps. dts[i]
// spans dates[i] -> dates[i+1] in years (calendar days / 365).
struct Dataset {
    std::vector<std::string> dates;  // ISO yyyy-mm-dd, strictly increasing
    std::vector<std::int64_t> day_numbers;
    std::vector<double> closes;
    std::vector<double> log_prices;
    std::vector<double> dts;

    std::size_t size() const { return dates.size(); }
    void validate() const;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
};

// Days since 1970-01-01 for an ISO date; throws data_error on a malformed or
// impossible date.
std::int64_t parse_iso_date(const std::string& iso);

// Reads a CSV with a header naming a date column and a close column
// (case-insensitive). Rejections carry 1-based line numbers.
Dataset ingest_csv(const std::string& path);

// Rebuilds a dataset from parallel date/close lists (the CSV-free entry).
Dataset make_dataset(std::vector<std::string> dates, std::vector<double> closes);

// Rows dated <= last_train_date go to train, the rest to test. Either side
// may be empty; dts are recomputed per side.
SplitDataset split_by_date(const Dataset& data, const std::string& last_train_date);

}  // namespace sigmmd
