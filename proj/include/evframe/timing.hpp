#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

namespace evf {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) noexcept {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct LatencySummary {
    std::size_t count = 0;
    double total = 0.0; // seconds
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
};

/// Wall-time samples of one stage, in seconds. Not thread-safe; one writer.
class LatencySeries {
public:
    void add(double seconds) { samples_.push_back(seconds); }
    void clear() noexcept { samples_.clear(); }

    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }

    /// Nearest-rank percentiles.
    [[nodiscard]] LatencySummary summary() const {
        LatencySummary s;
        s.count = samples_.size();
        if (samples_.empty()) {
            return s;
        }
        std::vector<double> sorted = samples_;
        std::sort(sorted.begin(), sorted.end());
        for (double v : sorted) {
            s.total += v;
        }
        auto rank = [&](double q) {
            const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
            return sorted[std::clamp<std::size_t>(k, 1, sorted.size()) - 1];
        };
        s.p50 = rank(0.50);
        s.p90 = rank(0.90);
        s.p99 = rank(0.99);
        return s;
    }

private:
    std::vector<double> samples_;
};

/// Adds the scope's duration to a series, if one is given.
class ScopedSample {
public:
    explicit ScopedSample(LatencySeries* series) noexcept : series_(series) {
        if (series_) {
            t0_ = Clock::now();
        }
    }
    ~ScopedSample() {
        if (series_) {
            series_->add(seconds_since(t0_));
        }
    }
    ScopedSample(const ScopedSample&) = delete;
    ScopedSample& operator=(const ScopedSample&) = delete;

private:
    LatencySeries* series_;
    Clock::time_point t0_{};
};

} // namespace evf
