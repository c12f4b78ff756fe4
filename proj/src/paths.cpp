#include "sigmmd/paths.hpp"

#include <cmath>

#include "sigmmd/errors.hpp"

namespace sigmmd {

void LogPath::validate() const {
    if (times.size() != values.size()) throw invalid_input("path: times/values length mismatch");
    if (values.size() < 2) throw invalid_input("path: needs at least 2 points");
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (times[i + 1] < times[i]) throw invalid_input("path: times must be non-decreasing");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw invalid_input("path: non-finite value");
    }
}

Matrix AugmentedPath::channels() const {
    Matrix m(3, t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        m(0, i) = t[i];
        m(1, i) = lead[i];
        m(2, i) = lag[i];
    }
    return m;
}

ReturnSeries log_returns(const LogPath& path) {
    path.validate();
    ReturnSeries out;
    out.returns.resize(path.size() - 1);
    out.dt.resize(path.size() - 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        out.returns[i] = path.values[i + 1] - path.values[i];
        out.dt[i] = path.times[i + 1] - path.times[i];
    }
    return out;
}

LogPath start_normalize(const LogPath& path) {
    path.validate();
    LogPath out = path;
    const double t0 = out.times.front();
    const double v0 = out.values.front();
    for (auto& t : out.times) t -= t0;
    for (auto& v : out.values) v -= v0;
    return out;
}

AugmentedPath lead_lag_time_augment(const LogPath& path, std::size_t lag) {
    if (lag < 1) throw invalid_input("lead_lag_time_augment: lag must be >= 1");
    const LogPath norm = start_normalize(path);
    const std::size_t n = norm.size() - 1;
    const std::size_t len = n + 1 + lag;
    AugmentedPath out;
    out.lag_steps = lag;
    out.t.resize(len);
    out.lead.resize(len);
    out.lag.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        const std::size_t clamped = i <= n ? i : n;
        out.t[i] = norm.times[clamped];
        out.lead[i] = norm.values[clamped];
        out.lag[i] = i < lag ? 0.0 : norm.values[i - lag];
    }
    return out;
}

Matrix time_augment(const LogPath& path) {
    const LogPath norm = start_normalize(path);
    Matrix m(2, norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i) {
        m(0, i) = norm.times[i];
        m(1, i) = norm.values[i];
    }
    return m;
}

std::vector<Segment> sample_segments(std::size_t series_len, std::size_t seg_len,
                                     std::size_t stride, std::size_t history_len) {
    if (stride < 1) throw invalid_input("sample_segments: stride must be >= 1");
    if (history_len >= seg_len) throw invalid_input("sample_segments: history must be shorter than segment");
    std::vector<Segment> out;
    if (seg_len > series_len) return out;
    for (std::size_t start = 0; start + seg_len <= series_len; start += stride) {
        out.push_back(Segment{start, history_len, seg_len});
    }
    return out;
}

}  // namespace sigmmd
