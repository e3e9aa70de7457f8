#pragma once

#include "evframe/error.hpp"
#include "evframe/event.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace evf::synth {

enum class Pattern { moving_bar, blob_orbit, uniform_noise };

inline Pattern parse_pattern(std::string_view s) {
    if (s == "moving-bar") return Pattern::moving_bar;
    if (s == "blob-orbit") return Pattern::blob_orbit;
    if (s == "uniform-noise") return Pattern::uniform_noise;
    throw GeometryError("unknown pattern '" + std::string(s) + "' (moving-bar|blob-orbit|uniform-noise)");
}

inline std::string_view to_string(Pattern p) noexcept {
    switch (p) {
    case Pattern::moving_bar: return "moving-bar";
    case Pattern::blob_orbit: return "blob-orbit";
    case Pattern::uniform_noise: return "uniform-noise";
    }
    return "?";
}

struct SynthConfig {
    Pattern pattern = Pattern::moving_bar;
    double rate = 1e6;     // events per second
    double duration = 0.1; // seconds
    std::uint64_t seed = 1;
    std::uint16_t width = sensor_width;
    std::uint16_t height = sensor_height;

    [[nodiscard]] std::uint64_t event_count() const noexcept {
        return static_cast<std::uint64_t>(std::llround(rate * duration));
    }
};

/// Deterministic event stream. Events come in same-timestamp bursts; burst k
/// starting at event index i is stamped floor(i * 1e6 / rate) microseconds.
///  - moving-bar: a 6-row horizontal bar sweeping up and down, bursts of whole
///    32-pixel banks (positive on the leading edge, negative on the trailing one)
///  - blob-orbit: a Gaussian blob circling the sensor centre once per second
///  - uniform-noise: isolated uniformly random events
inline std::vector<Event> synthesize(const SynthConfig& cfg) {
    if (!(cfg.rate > 0) || !(cfg.duration >= 0)) {
        throw GeometryError("rate must be positive and duration non-negative");
    }
    if (cfg.duration * 1e6 >= static_cast<double>(timestamp_modulus)) {
        throw GeometryError("duration exceeds one 24-bit timestamp period (16.77 s)");
    }
    if (cfg.width < 32 || cfg.height < 8) {
        throw GeometryError("sensor too small for synthetic patterns");
    }
    const std::uint64_t total = cfg.event_count();
    std::vector<Event> out;
    out.reserve(total);
    std::mt19937_64 rng(cfg.seed);
    const unsigned banks = cfg.width / 32;
    const double w = cfg.width;
    const double h = cfg.height;

    while (out.size() < total) {
        const auto t = static_cast<std::uint32_t>(std::floor(static_cast<double>(out.size()) * 1e6 / cfg.rate));
        const std::uint64_t room = total - out.size();
        const double seconds = t * 1e-6;

        switch (cfg.pattern) {
        case Pattern::moving_bar: {
            constexpr int bar_rows = 6;
            const double span = h - bar_rows;
            const double phase = std::fmod(seconds * 2.0, 2.0); // one sweep per half second
            const bool down = phase < 1.0;
            const int top = static_cast<int>((down ? phase : 2.0 - phase) * span);
            const int row = static_cast<int>(rng() % bar_rows);
            const auto p = static_cast<std::uint8_t>((row < bar_rows / 2) == down ? 1 : 0);
            const unsigned bank = static_cast<unsigned>(rng() % banks);
            const bool full = rng() % 5 != 0;
            const std::uint32_t mask = full ? 0xFFFFFFFFu : static_cast<std::uint32_t>(rng());
            for (unsigned b = 0; b < 32 && out.size() < total; ++b) {
                if (mask & (1u << b)) {
                    out.push_back(Event{static_cast<std::uint16_t>(bank * 32 + b),
                                        static_cast<std::uint16_t>(top + row), p, t});
                }
            }
            if (mask == 0) {
                out.push_back(Event{static_cast<std::uint16_t>(bank * 32), static_cast<std::uint16_t>(top + row), p, t});
            }
            break;
        }
        case Pattern::blob_orbit: {
            const double angle = 2.0 * std::numbers::pi * seconds;
            const double cx = w / 2 + 0.3 * h * std::cos(angle);
            const double cy = h / 2 + 0.3 * h * std::sin(angle);
            std::normal_distribution<double> spread(0.0, 20.0);
            const auto n = std::min<std::uint64_t>(1 + rng() % 4, room);
            for (std::uint64_t k = 0; k < n; ++k) {
                const double x = std::clamp(cx + spread(rng), 0.0, w - 1);
                const double y = std::clamp(cy + spread(rng), 0.0, h - 1);
                out.push_back(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                    static_cast<std::uint8_t>(rng() & 1), t});
            }
            break;
        }
        case Pattern::uniform_noise:
            out.push_back(Event{static_cast<std::uint16_t>(rng() % cfg.width),
                                static_cast<std::uint16_t>(rng() % cfg.height), static_cast<std::uint8_t>(rng() & 1), t});
            break;
        }
    }
    return out;
}

/// Event counts per [k * window, (k + 1) * window) bucket.
inline std::vector<std::uint64_t> window_counts(const std::vector<Event>& events, std::uint32_t window) {
    std::vector<std::uint64_t> counts;
    if (window == 0) {
        return counts;
    }
    for (const Event& e : events) {
        const std::size_t k = e.t / window;
        if (k >= counts.size()) {
            counts.resize(k + 1, 0);
        }
        ++counts[k];
    }
    return counts;
}

} // namespace evf::synth
