#pragma once

#include "evframe/event.hpp"
#include "evframe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace evf {

enum class Representation : std::uint8_t {
    binary = 0,
    histogram = 1,
    sets = 2, // shift-based exponential time surface
    slts = 3, // shift-based linear time surface
};

inline constexpr std::string_view to_string(Representation r) noexcept {
    switch (r) {
    case Representation::binary: return "binary";
    case Representation::histogram: return "hist";
    case Representation::sets: return "sets";
    case Representation::slts: return "slts";
    }
    return "?";
}

struct SurfaceConfig {
    Representation kind = Representation::sets;
    /// Decay parameter: one decay step per 2^tau_shift timestamp ticks.
    std::uint32_t tau_shift = 16;
    /// Output quantizer: u8 = clamp((v * scale) >> shift, 0, 255).
    std::uint32_t scale = 1;
    std::uint32_t shift = 0;
    /// Separate last-timestamp grids per polarity instead of one shared grid.
    bool per_polarity_timestamps = false;
};

/// Shift of a 16-bit cell beyond which SETS restarts the cell at 1.
inline constexpr std::uint32_t sets_shift_limit = 16;
inline constexpr std::uint16_t cell_max = std::numeric_limits<std::uint16_t>::max();

/// One accumulation buffer: per-polarity 16-bit cells plus 24-bit last-event timestamps.
struct SurfaceState {
    std::vector<std::uint16_t> mem_neg;
    std::vector<std::uint16_t> mem_pos;
    std::vector<std::uint32_t> t_last;
    bool per_polarity_timestamps = false;

    SurfaceState() = default;
    explicit SurfaceState(std::size_t depth, bool per_polarity = false)
        : mem_neg(depth, 0), mem_pos(depth, 0), t_last(per_polarity ? 2 * depth : depth, 0),
          per_polarity_timestamps(per_polarity) {}

    [[nodiscard]] std::size_t depth() const noexcept { return mem_pos.size(); }

    [[nodiscard]] std::vector<std::uint16_t>& mem(std::uint8_t p) noexcept { return p ? mem_pos : mem_neg; }
    [[nodiscard]] const std::vector<std::uint16_t>& mem(std::uint8_t p) const noexcept {
        return p ? mem_pos : mem_neg;
    }

    [[nodiscard]] std::size_t timestamp_slot(std::size_t addr, std::uint8_t p) const noexcept {
        return per_polarity_timestamps && p ? addr + depth() : addr;
    }

    void reset_memory() noexcept {
        std::fill(mem_neg.begin(), mem_neg.end(), 0);
        std::fill(mem_pos.begin(), mem_pos.end(), 0);
    }
    void reset_timestamps() noexcept { std::fill(t_last.begin(), t_last.end(), 0); }
    void reset() noexcept {
        reset_memory();
        reset_timestamps();
    }
};

inline void update_binary(SurfaceState& s, std::size_t addr, std::uint8_t p) noexcept { s.mem(p)[addr] = 255; }

inline void update_histogram(SurfaceState& s, std::size_t addr, std::uint8_t p) noexcept {
    auto& cell = s.mem(p)[addr];
    if (cell != cell_max) {
        ++cell;
    }
}

/// Decay steps between two 24-bit timestamps. If the shifted past value is
/// ahead of the present one the counter has wrapped, and the present value
/// alone is used. With tau_shift = 16 this is exactly the difference of the
/// upper timestamp bytes.
constexpr std::uint32_t compute_shift(std::uint32_t t_present, std::uint32_t t_past, std::uint32_t tau_shift) noexcept {
    if (tau_shift >= 32) {
        return 0;
    }
    const std::uint32_t now = (t_present & timestamp_mask) >> tau_shift;
    const std::uint32_t past = (t_past & timestamp_mask) >> tau_shift;
    return past <= now ? now - past : now;
}

inline void update_sets(SurfaceState& s, std::size_t addr, std::uint8_t p, std::uint32_t shift) noexcept {
    auto& cell = s.mem(p)[addr];
    if (shift < sets_shift_limit) {
        const std::uint32_t next = 1u + (static_cast<std::uint32_t>(cell) >> shift);
        cell = static_cast<std::uint16_t>(std::min<std::uint32_t>(next, cell_max));
    } else {
        cell = 1;
    }
}

inline void update_slts(SurfaceState& s, std::size_t addr, std::uint8_t p, std::uint32_t shift) noexcept {
    auto& cell = s.mem(p)[addr];
    if (shift < cell) {
        const std::uint32_t next = 1u + cell - shift;
        cell = static_cast<std::uint16_t>(std::min<std::uint32_t>(next, cell_max));
    } else {
        cell = 1;
    }
}

/// Per-event ALU step: address generation, then the representation's update.
/// The event must lie inside the geometry's input grid.
inline void apply_event(SurfaceState& s, const SurfaceConfig& cfg, const Event& e, const GridGeometry& geom) noexcept {
    const std::uint32_t addr = geom.address_of(e);
    switch (cfg.kind) {
    case Representation::binary:
        update_binary(s, addr, e.p);
        break;
    case Representation::histogram:
        update_histogram(s, addr, e.p);
        break;
    case Representation::sets:
    case Representation::slts: {
        auto& t_last = s.t_last[s.timestamp_slot(addr, e.p)];
        const std::uint32_t shift = compute_shift(e.t, t_last, cfg.tau_shift);
        if (cfg.kind == Representation::sets) {
            update_sets(s, addr, e.p, shift);
        } else {
            update_slts(s, addr, e.p, shift);
        }
        t_last = e.t;
        break;
    }
    }
}

// --- quantizer -------------------------------------------------------------

constexpr std::uint8_t scale_shift_u8(std::uint16_t v, std::uint32_t scale, std::uint32_t shift) noexcept {
    const std::uint64_t scaled = static_cast<std::uint64_t>(v) * scale;
    const std::uint64_t shifted = shift >= 64 ? 0 : scaled >> shift;
    return static_cast<std::uint8_t>(std::min<std::uint64_t>(shifted, 255));
}

inline void quantize_plane(std::span<const std::uint16_t> in, std::uint32_t scale, std::uint32_t shift,
                           std::span<std::uint8_t> out) noexcept {
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = scale_shift_u8(in[i], scale, shift);
    }
}

/// Histogram output shift: max(0, ceil(log2(n_events / depth))).
constexpr std::uint32_t default_histogram_shift(std::uint64_t n_events, std::uint64_t depth) noexcept {
    std::uint32_t s = 0;
    while (s < 63 && (depth << s) < n_events) {
        ++s;
    }
    return s;
}

// --- floating-point references ---------------------------------------------

struct ReferenceSurface {
    std::vector<double> neg;
    std::vector<double> pos;

    [[nodiscard]] const std::vector<double>& plane(std::uint8_t p) const noexcept { return p ? pos : neg; }
};

/// Decay constant whose half-life is 2^tau_shift ticks.
inline double ets_tau_for_shift(std::uint32_t tau_shift) { return std::ldexp(1.0, static_cast<int>(tau_shift)) / std::numbers::ln2; }

/// Exponential time surface: S <- 1 + S * exp(-dt / tau). One shared
/// last-timestamp grid, events assumed time-sorted without counter wrap.
inline ReferenceSurface reference_ets(std::span<const Event> events, double tau, const GridGeometry& geom) {
    ReferenceSurface out{std::vector<double>(geom.depth(), 0.0), std::vector<double>(geom.depth(), 0.0)};
    std::vector<double> t_last(geom.depth(), 0.0);
    for (const Event& e : events) {
        const std::uint32_t addr = geom.address_of(e);
        const double dt = static_cast<double>(e.t) - t_last[addr];
        auto& cell = e.p ? out.pos[addr] : out.neg[addr];
        cell = 1.0 + cell * std::exp(-dt / tau);
        t_last[addr] = e.t;
    }
    return out;
}

/// Linear time surface: S <- 1 + max(0, S - dt / 2^tau_shift).
inline ReferenceSurface reference_lts(std::span<const Event> events, std::uint32_t tau_shift, const GridGeometry& geom) {
    ReferenceSurface out{std::vector<double>(geom.depth(), 0.0), std::vector<double>(geom.depth(), 0.0)};
    std::vector<double> t_last(geom.depth(), 0.0);
    const double period = std::ldexp(1.0, static_cast<int>(tau_shift));
    for (const Event& e : events) {
        const std::uint32_t addr = geom.address_of(e);
        const double dt = static_cast<double>(e.t) - t_last[addr];
        auto& cell = e.p ? out.pos[addr] : out.neg[addr];
        cell = 1.0 + std::max(0.0, cell - dt / period);
        t_last[addr] = e.t;
    }
    return out;
}

} // namespace evf
