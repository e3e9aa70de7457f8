#pragma once

#include "evframe/event.hpp"
#include "evframe/geometry.hpp"
#include "evframe/surfaces.hpp"
#include "evframe/timing.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace evf {

enum class AccumulationMode : std::uint8_t {
    constant_event = 0,
    constant_time = 1,
};

enum class DropPolicy : std::uint8_t {
    block = 0,
    drop_frame = 1,
};

/// Slowest frame period the hardware frame transfer sustains (12,200 fps).
inline constexpr double max_transfer_fps = 12200.0;

struct FramerConfig {
    AccumulationMode mode = AccumulationMode::constant_event;
    std::uint32_t n_events = 20000;
    std::uint32_t window = 1000; // timestamp ticks (us)
    SurfaceConfig surface;
    /// 2: planes [negative, positive]; 1: the positive plane only.
    std::uint8_t channels = 2;
    std::size_t queue_capacity = 4;
    DropPolicy drop_policy = DropPolicy::block;
    /// Zero the timestamp grid at every buffer swap instead of carrying it over.
    bool reset_timestamps_on_swap = false;

    /// Non-fatal configuration concerns.
    [[nodiscard]] std::vector<std::string> warnings(const GridGeometry& geom) const {
        std::vector<std::string> out;
        if (mode == AccumulationMode::constant_event && n_events < geom.depth()) {
            out.push_back("n_events " + std::to_string(n_events) + " is below the grid depth " +
                          std::to_string(geom.depth()));
        }
        if (mode == AccumulationMode::constant_time && 1e6 / static_cast<double>(window) > max_transfer_fps) {
            out.push_back("window " + std::to_string(window) + " us exceeds 12200 frames/s");
        }
        return out;
    }
};

struct Frame {
    std::uint32_t index = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint8_t channels = 0;
    Representation kind = Representation::sets;
    AccumulationMode mode = AccumulationMode::constant_event;
    std::uint32_t t_start = 0;
    std::uint32_t t_end = 0;
    std::uint32_t event_count = 0;
    /// Sealed by flush() before its boundary condition fired.
    bool partial = false;
    /// One or more frames were dropped between the previous delivered frame and this one.
    bool dropped = false;
    /// Channel-planar, row-major.
    std::vector<std::uint8_t> data;

    [[nodiscard]] std::size_t plane_size() const noexcept { return std::size_t{width} * height; }
    [[nodiscard]] std::span<const std::uint8_t> plane(std::size_t c) const noexcept {
        return std::span<const std::uint8_t>(data).subspan(c * plane_size(), plane_size());
    }
};

struct FramerStats {
    std::uint64_t frames_emitted = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t frames_sealed = 0;
    std::uint64_t frames_partial = 0;
    std::uint64_t events_integrated = 0;
    std::uint64_t events_rejected = 0; // outside the input grid
    std::uint64_t events_dropped = 0;  // integrated into frames that were then dropped
    std::uint64_t events_while_blocked = 0;
    std::uint64_t holds_input_empty = 0;
    std::uint64_t holds_output_full = 0;
};

/// Constant-event / constant-time accumulation over a ping-pong pair of
/// surface buffers. One buffer integrates while the sealed one is read out
/// into a Frame and zeroed. The last-timestamp grid follows the active buffer.
class Framer {
public:
    explicit Framer(FramerConfig cfg, GridGeometry geom = GridGeometry())
        : cfg_(std::move(cfg)), geom_(std::move(geom)),
          buffers_{SurfaceState(geom_.depth(), cfg_.surface.per_polarity_timestamps),
                   SurfaceState(geom_.depth(), cfg_.surface.per_polarity_timestamps)} {
        if (cfg_.channels != 1 && cfg_.channels != 2) {
            throw GeometryError("frames carry 1 or 2 channels");
        }
        if (cfg_.mode == AccumulationMode::constant_event && cfg_.n_events == 0) {
            throw GeometryError("n_events must be positive");
        }
        if (cfg_.mode == AccumulationMode::constant_time && cfg_.window == 0) {
            throw GeometryError("window must be positive");
        }
    }

    /// Integrate one event. Returns the sealed frame when a boundary fires.
    /// In constant-time mode the event that crosses a window edge opens the next frame.
    std::optional<Frame> push(const Event& e) {
        if (!geom_.contains(e)) {
            ++stats_.events_rejected;
            return std::nullopt;
        }
        std::optional<Frame> out;
        if (cfg_.mode == AccumulationMode::constant_time) {
            const std::uint64_t now = widen(e.t);
            if (!window_open_) {
                window_start_ = now;
                window_open_ = true;
            } else if (now >= window_start_ + cfg_.window) {
                out = seal(false);
                window_start_ += (now - window_start_) / cfg_.window * cfg_.window;
            }
        }
        integrate(e);
        if (cfg_.mode == AccumulationMode::constant_event && count_ == cfg_.n_events) {
            out = seal(false);
        }
        return out;
    }

    /// Seal whatever is pending as a partial frame.
    std::optional<Frame> flush() {
        if (count_ == 0) {
            return std::nullopt;
        }
        Frame f = seal(true);
        window_open_ = false;
        return f;
    }

    /// Zero both buffers and all counters-in-flight; stats are kept.
    void reset() {
        for (auto& b : buffers_) {
            b.reset();
        }
        count_ = 0;
        window_open_ = false;
        have_prev_ = false;
        epoch_ = 0;
    }

    [[nodiscard]] const FramerConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const GridGeometry& geometry() const noexcept { return geom_; }
    [[nodiscard]] const FramerStats& stats() const noexcept { return stats_; }
    [[nodiscard]] FramerStats& stats() noexcept { return stats_; }
    [[nodiscard]] const SurfaceState& active_buffer() const noexcept { return buffers_[active_]; }
    [[nodiscard]] std::uint32_t pending_events() const noexcept { return count_; }

    /// Record the readout (quantize) time of every sealed frame into `series`; nullptr stops it.
    void record_quantize(LatencySeries* series) noexcept { quantize_log_ = series; }

private:
    std::uint64_t widen(std::uint32_t t) {
        if (have_prev_ && t < prev_t_) {
            epoch_ += timestamp_modulus;
        }
        have_prev_ = true;
        prev_t_ = t;
        return epoch_ + t;
    }

    void integrate(const Event& e) {
        if (count_ == 0) {
            first_t_ = e.t;
        }
        last_t_ = e.t;
        ++count_;
        ++stats_.events_integrated;
        apply_event(buffers_[active_], cfg_.surface, e, geom_);
    }

    Frame seal(bool partial) {
        Frame f;
        f.index = next_index_++;
        f.width = static_cast<std::uint16_t>(geom_.out_width);
        f.height = static_cast<std::uint16_t>(geom_.out_height);
        f.channels = cfg_.channels;
        f.kind = cfg_.surface.kind;
        f.mode = cfg_.mode;
        f.event_count = count_;
        f.partial = partial;
        if (cfg_.mode == AccumulationMode::constant_time) {
            f.t_start = static_cast<std::uint32_t>(window_start_ & timestamp_mask);
            f.t_end = static_cast<std::uint32_t>((window_start_ + cfg_.window) & timestamp_mask);
        } else {
            f.t_start = first_t_;
            f.t_end = last_t_;
        }

        SurfaceState& retired = buffers_[active_];
        const std::size_t depth = geom_.depth();
        f.data.resize(depth * cfg_.channels);
        {
            ScopedSample sample(quantize_log_);
            auto out = std::span<std::uint8_t>(f.data);
            if (cfg_.channels == 2) {
                quantize_plane(retired.mem_neg, cfg_.surface.scale, cfg_.surface.shift, out.subspan(0, depth));
                quantize_plane(retired.mem_pos, cfg_.surface.scale, cfg_.surface.shift, out.subspan(depth, depth));
            } else {
                quantize_plane(retired.mem_pos, cfg_.surface.scale, cfg_.surface.shift, out);
            }
        }

        SurfaceState& next = buffers_[active_ ^ 1];
        std::swap(retired.t_last, next.t_last);
        if (cfg_.reset_timestamps_on_swap) {
            next.reset_timestamps();
        }
        retired.reset();
        active_ ^= 1;

        count_ = 0;
        ++stats_.frames_sealed;
        if (partial) {
            ++stats_.frames_partial;
        }
        return f;
    }

    FramerConfig cfg_;
    GridGeometry geom_;
    std::array<SurfaceState, 2> buffers_;
    unsigned active_ = 0;
    FramerStats stats_;
    LatencySeries* quantize_log_ = nullptr;

    std::uint32_t next_index_ = 0;
    std::uint32_t count_ = 0;
    std::uint32_t first_t_ = 0;
    std::uint32_t last_t_ = 0;

    bool window_open_ = false;
    std::uint64_t window_start_ = 0;
    bool have_prev_ = false;
    std::uint32_t prev_t_ = 0;
    std::uint64_t epoch_ = 0;
};

} // namespace evf
