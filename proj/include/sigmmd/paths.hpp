#pragma once

#include <cstddef>
#include <vector>

#include "sigmmd/matrix.hpp"

namespace sigmmd {

// Discrete log-price path: calendar times in years plus log prices.
struct LogPath {
    std::vector<double> times;
    std::vector<double> values;

    void validate() const;
    std::size_t size() const { return values.size(); }
};

// Lead-lag and time augmented sequence. All three channels have length
// n+1+l where n+1 is the input length and l the lag.
struct AugmentedPath {
    std::vector<double> t;
    std::vector<double> lead;
    std::vector<double> lag;
    std::size_t lag_steps = 1;

    std::size_t size() const { return t.size(); }

    // Channel-major matrix (3 x points), the signature kernel input layout.
    Matrix channels() const;
};

struct Segment {
    std::size_t start_index = 0;
    std::size_t history_len = 1;
    std::size_t total_len = 2;
};

struct ReturnSeries {
    std::vector<double> returns;
    std::vector<double> dt;
};

// returns[i] = values[i+1] - values[i], dt[i] = times[i+1] - times[i].
ReturnSeries log_returns(const LogPath& path);

// Shift times and values so both start at 0.
LogPath start_normalize(const LogPath& path);

// Def of the lead-lag/time augmentation: start-normalizes, then pads t and
// lead with their final values and prefixes lag with zeros.
AugmentedPath lead_lag_time_augment(const LogPath& path, std::size_t lag);

// Two-channel (time, value) augmentation with start normalization; used by
// the stochastic-volatility validation experiment where lead-lag is omitted.
Matrix time_augment(const LogPath& path);

// Overlapping segment starts at 0, stride, 2*stride, ... while the segment
// fits. Returns an empty list when seg_len > series_len.
std::vector<Segment> sample_segments(std::size_t series_len, std::size_t seg_len,
                                     std::size_t stride, std::size_t history_len = 1);

}  // namespace sigmmd
