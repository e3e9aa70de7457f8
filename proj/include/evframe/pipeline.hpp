#pragma once

#include "evframe/bounded_queue.hpp"
#include "evframe/error.hpp"
#include "evframe/framer.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <utility>
#include <vector>

namespace evf {

enum class SourceStatus {
    ok,    // batch filled, more may follow
    empty, // nothing available yet (input FIFO empty)
    end,   // batch holds the final events, if any
};

/// Raised when a source fails mid-run; carries the stats accumulated so far.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what, FramerStats partial)
        : Error(ErrorClass::pipeline, what), stats_(partial) {}

    [[nodiscard]] const FramerStats& stats() const noexcept { return stats_; }

private:
    FramerStats stats_;
};

/// Serves an in-memory event list in fixed-size batches.
class SpanSource {
public:
    explicit SpanSource(std::span<const Event> events, std::size_t batch = 4096)
        : events_(events), batch_(batch == 0 ? 1 : batch) {}

    SourceStatus operator()(std::vector<Event>& out) {
        const std::size_t n = std::min(batch_, events_.size() - pos_);
        out.insert(out.end(), events_.begin() + static_cast<std::ptrdiff_t>(pos_),
                   events_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return pos_ == events_.size() ? SourceStatus::end : SourceStatus::ok;
    }

private:
    std::span<const Event> events_;
    std::size_t batch_;
    std::size_t pos_ = 0;
};

/// Pulls event batches from an upstream stage. Reports `empty` once per
/// stall, then blocks on the next call.
class QueueSource {
public:
    explicit QueueSource(BoundedQueue<std::vector<Event>>& queue) : queue_(queue) {}

    SourceStatus operator()(std::vector<Event>& out) {
        std::optional<std::vector<Event>> item = stalled_ ? queue_.pop() : queue_.try_pop();
        if (!item && !stalled_ && !queue_.closed()) {
            stalled_ = true;
            return SourceStatus::empty;
        }
        stalled_ = false;
        if (!item) {
            item = queue_.try_pop();
            if (!item) {
                return SourceStatus::end;
            }
        }
        out = std::move(*item);
        return SourceStatus::ok;
    }

private:
    BoundedQueue<std::vector<Event>>& queue_;
    bool stalled_ = false;
};

/// Drive `framer` from `source` into `sink` until the source ends, then flush
/// and close the sink. With DropPolicy::block a full sink stalls the stage;
/// with DropPolicy::drop_frame the sealed frame is discarded. `batch_timing`
/// receives the integration time of each source batch.
template <typename Source>
FramerStats run_pipeline(Source&& source, Framer& framer, BoundedQueue<Frame>& sink, DropPolicy policy,
                         LatencySeries* batch_timing = nullptr) {
    FramerStats& stats = framer.stats();
    bool lost_since_delivery = false;

    auto deliver = [&](Frame&& frame, std::size_t events_waiting) {
        frame.dropped = lost_since_delivery;
        if (policy == DropPolicy::drop_frame) {
            if (!sink.try_push(frame)) {
                ++stats.frames_dropped;
                stats.events_dropped += frame.event_count;
                lost_since_delivery = true;
                return;
            }
        } else {
            if (sink.full()) {
                ++stats.holds_output_full;
                stats.events_while_blocked += events_waiting;
            }
            const std::uint32_t count = frame.event_count;
            if (!sink.push(std::move(frame))) {
                // consumer went away
                ++stats.frames_dropped;
                stats.events_dropped += count;
                lost_since_delivery = true;
                return;
            }
        }
        lost_since_delivery = false;
        ++stats.frames_emitted;
    };

    std::vector<Event> batch;
    try {
        for (;;) {
            batch.clear();
            const SourceStatus status = source(batch);
            if (status == SourceStatus::empty) {
                ++stats.holds_input_empty;
                std::this_thread::yield();
                continue;
            }
            const auto t0 = Clock::now();
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (auto frame = framer.push(batch[i])) {
                    deliver(std::move(*frame), batch.size() - i - 1);
                }
            }
            if (batch_timing && !batch.empty()) {
                batch_timing->add(seconds_since(t0));
            }
            if (status == SourceStatus::end) {
                break;
            }
        }
        if (auto frame = framer.flush()) {
            deliver(std::move(*frame), 0);
        }
    } catch (const std::exception& ex) {
        sink.close();
        throw PipelineError(std::string("source failed: ") + ex.what(), stats);
    }
    sink.close();
    return stats;
}

} // namespace evf
