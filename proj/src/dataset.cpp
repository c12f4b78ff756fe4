#include "sigmmd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sigmmd/errors.hpp"

namespace sigmmd {

namespace {

std::string lower_trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    std::string out = s.substr(a, b - a);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::int64_t parse_iso_date(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream ss(iso);
    ss >> y >> dash1 >> m >> dash2 >> d;
    if (ss.fail() || dash1 != '-' || dash2 != '-' || !ss.eof() || m <= 0 || d <= 0) {
        throw data_error("dataset: malformed ISO date '" + iso + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) throw data_error("dataset: impossible date '" + iso + "'");
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

void Dataset::validate() const {
    if (dates.size() != closes.size() || dates.size() != log_prices.size() ||
        dates.size() != day_numbers.size()) {
        throw data_error("dataset: column lengths differ");
    }
    if (!dates.empty() && dts.size() != dates.size() - 1) {
        throw data_error("dataset: dt count must be one less than the row count");
    }
    for (std::size_t i = 0; i + 1 < day_numbers.size(); ++i) {
        if (day_numbers[i + 1] <= day_numbers[i]) {
            throw data_error("dataset: dates not strictly increasing at row " +
                             std::to_string(i + 2));
        }
    }
    for (std::size_t i = 0; i < closes.size(); ++i) {
        if (!(closes[i] > 0.0) || !std::isfinite(closes[i])) {
            throw data_error("dataset: non-positive close at row " + std::to_string(i + 1));
        }
    }
}

Dataset make_dataset(std::vector<std::string> dates, std::vector<double> closes) {
    if (dates.size() != closes.size()) throw data_error("dataset: dates/closes length mismatch");
    Dataset out;
    out.dates = std::move(dates);
    out.closes = std::move(closes);
    out.day_numbers.reserve(out.dates.size());
    out.log_prices.reserve(out.dates.size());
    for (std::size_t i = 0; i < out.dates.size(); ++i) {
        out.day_numbers.push_back(parse_iso_date(out.dates[i]));
        if (!(out.closes[i] > 0.0) || !std::isfinite(out.closes[i])) {
            throw data_error("dataset: non-positive close at row " + std::to_string(i + 1));
        }
        out.log_prices.push_back(std::log(out.closes[i]));
    }
    for (std::size_t i = 0; i + 1 < out.day_numbers.size(); ++i) {
        const std::int64_t gap = out.day_numbers[i + 1] - out.day_numbers[i];
        if (gap <= 0) {
            throw data_error("dataset: dates not strictly increasing at row " +
                             std::to_string(i + 2));
        }
        out.dts.push_back(static_cast<double>(gap) / 365.0);
    }
    out.validate();
    return out;
}

Dataset ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("dataset: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error("dataset: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_fields(line);
    std::size_t date_col = header.size(), close_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = lower_trim(header[i]);
        if (name == "date") date_col = i;
        if (name == "close") close_col = i;
    }
    if (date_col == header.size() || close_col == header.size()) {
        throw data_error("dataset: header must name date and close columns");
    }

    std::vector<std::string> dates;
    std::vector<double> closes;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() <= std::max(date_col, close_col)) {
            throw data_error("dataset: line " + std::to_string(line_no) + " has too few fields");
        }
        const std::string date_text = lower_trim(fields[date_col]);
        double close = 0.0;
        try {
            std::size_t used = 0;
            close = std::stod(fields[close_col], &used);
            std::string rest = fields[close_col].substr(used);
            if (!lower_trim(rest).empty()) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw data_error("dataset: line " + std::to_string(line_no) +
                             " has an unparseable close '" + fields[close_col] + "'");
        }
        if (!(close > 0.0) || !std::isfinite(close)) {
            throw data_error("dataset: line " + std::to_string(line_no) +
                             " has a non-positive close");
        }
        try {
            parse_iso_date(date_text);
        } catch (const data_error& e) {
            throw data_error("dataset: line " + std::to_string(line_no) + ": " + e.what());
        }
        dates.push_back(date_text);
        closes.push_back(close);
    }
    if (dates.empty()) throw data_error("dataset: '" + path + "' has no data rows");

    for (std::size_t i = 0; i + 1 < dates.size(); ++i) {
        const std::int64_t a = parse_iso_date(dates[i]);
        const std::int64_t b = parse_iso_date(dates[i + 1]);
        if (b == a) throw data_error("dataset: duplicate date '" + dates[i + 1] + "'");
        if (b < a) {
            throw data_error("dataset: dates out of order at '" + dates[i + 1] + "'");
        }
    }
    return make_dataset(std::move(dates), std::move(closes));
}

SplitDataset split_by_date(const Dataset& data, const std::string& last_train_date) {
    data.validate();
    const std::int64_t cut = parse_iso_date(last_train_date);
    std::vector<std::string> train_dates, test_dates;
    std::vector<double> train_closes, test_closes;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.day_numbers[i] <= cut) {
            train_dates.push_back(data.dates[i]);
            train_closes.push_back(data.closes[i]);
        } else {
            test_dates.push_back(data.dates[i]);
            test_closes.push_back(data.closes[i]);
        }
    }
    SplitDataset out;
    out.train = make_dataset(std::move(train_dates), std::move(train_closes));
    out.test = make_dataset(std::move(test_dates), std::move(test_closes));
    return out;
}

}  // namespace sigmmd
