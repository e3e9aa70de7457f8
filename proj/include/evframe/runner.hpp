#pragma once

// Raw byte stream -> decode -> frame -> (optional) infer, either as three
// threads joined by bounded queues or inline on the calling thread. Frames and
// predictions reach the callback in order on the calling thread.

#include "evframe/bounded_queue.hpp"
#include "evframe/evt3.hpp"
#include "evframe/framer.hpp"
#include "evframe/nn/executor.hpp"
#include "evframe/pipeline.hpp"
#include "evframe/report.hpp"
#include "evframe/timing.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <exception>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace evf {

struct RunOptions {
    FramerConfig framer;
    GridGeometry geometry;
    std::size_t chunk_bytes = std::size_t{1} << 16;
    bool threaded = true;
};

/// Reads an istream in chunks. Returns the number of bytes placed in `buf`; 0 at end.
class StreamReader {
public:
    explicit StreamReader(std::istream& is) : is_(is) {}

    std::size_t operator()(std::span<std::uint8_t> buf) {
        is_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (is_.bad()) {
            throw IoError("read failed");
        }
        return static_cast<std::size_t>(is_.gcount());
    }

private:
    std::istream& is_;
};

class MemoryReader {
public:
    explicit MemoryReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t operator()(std::span<std::uint8_t> buf) {
        const std::size_t n = std::min(buf.size(), bytes_.size() - pos_);
        std::memcpy(buf.data(), bytes_.data() + pos_, n);
        pos_ += n;
        return n;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Throws ModelError(shape_mismatch) if frames of `opts` cannot feed `model`.
inline void check_compatible(const RunOptions& opts, const nn::QuantizedModel& model) {
    const auto& g = opts.geometry;
    if (model.input_channels != opts.framer.channels || model.input_height != static_cast<int>(g.out_height) ||
        model.input_width != static_cast<int>(g.out_width)) {
        throw ModelError(ModelError::Kind::shape_mismatch,
                         "frames are " + std::to_string(opts.framer.channels) + "x" + std::to_string(g.out_height) +
                             "x" + std::to_string(g.out_width) + " but model " + model.name + " expects " +
                             std::to_string(model.input_channels) + "x" + std::to_string(model.input_height) + "x" +
                             std::to_string(model.input_width));
    }
}

/// Runs the stream to its end. `on_frame(const Frame&, const nn::Prediction*)`
/// sees every delivered frame; the prediction is null without a model. Frames
/// sealed before a decode error are still delivered, then the error is rethrown.
/// With DropPolicy::block both modes deliver identical frames.
template <typename Reader, typename OnFrame>
RunReport run_stream(Reader&& read, const RunOptions& opts, const nn::QuantizedModel* model, OnFrame&& on_frame) {
    if (model) {
        check_compatible(opts, *model);
    }
    RunReport report;
    std::optional<nn::Executor> exec;
    if (model) {
        exec.emplace(*model);
        report.predictions.assign(static_cast<std::size_t>(model->class_count), 0);
    }
    Framer framer(opts.framer, opts.geometry);
    framer.record_quantize(&report.quantize);
    evt3::Decoder decoder(opts.geometry.in_width, opts.geometry.in_height);
    const std::size_t chunk = std::max<std::size_t>(opts.chunk_bytes, 2);

    auto consume = [&](const Frame& f) {
        ++report.frames;
        if (!exec) {
            on_frame(f, static_cast<const nn::Prediction*>(nullptr));
            return;
        }
        nn::Prediction pred;
        {
            ScopedSample sample(&report.infer);
            pred = exec->run(nn::to_tensor(f));
        }
        report.count_prediction(pred.class_id);
        on_frame(f, &pred);
    };

    // Pulls one chunk through the decoder; false at end of input.
    std::vector<std::uint8_t> buf(chunk);
    auto decode_chunk = [&](std::vector<Event>& events) {
        const std::size_t n = read(std::span<std::uint8_t>(buf));
        if (n == 0) {
            decoder.finish();
            return false;
        }
        const auto t0 = Clock::now();
        decoder.feed(std::span<const std::uint8_t>(buf.data(), n), events);
        report.decode.add(seconds_since(t0));
        return true;
    };

    const auto t_begin = Clock::now();
    std::exception_ptr failure;

    if (!opts.threaded) {
        std::vector<Event> events;
        std::vector<Frame> sealed;
        for (;;) {
            events.clear();
            try {
                if (!decode_chunk(events)) {
                    break;
                }
            } catch (const Error&) {
                failure = std::current_exception();
                break;
            }
            const auto t0 = Clock::now();
            for (const Event& e : events) {
                if (auto f = framer.push(e)) {
                    sealed.push_back(std::move(*f));
                }
            }
            if (!events.empty()) {
                report.frame.add(seconds_since(t0));
            }
            for (const Frame& f : sealed) {
                ++framer.stats().frames_emitted;
                consume(f);
            }
            sealed.clear();
        }
        if (auto f = framer.flush()) {
            ++framer.stats().frames_emitted;
            consume(*f);
        }
    } else {
        const std::size_t cap = std::max<std::size_t>(opts.framer.queue_capacity, 1);
        BoundedQueue<std::vector<Event>> event_q(cap);
        BoundedQueue<Frame> frame_q(cap);
        std::exception_ptr decode_failure;
        std::exception_ptr framer_failure;

        std::thread decode_thread([&] {
            try {
                for (;;) {
                    std::vector<Event> events;
                    if (!decode_chunk(events)) {
                        break;
                    }
                    if (!events.empty() && !event_q.push(std::move(events))) {
                        break;
                    }
                }
            } catch (...) {
                decode_failure = std::current_exception();
            }
            event_q.close();
        });
        std::thread frame_thread([&] {
            try {
                run_pipeline(QueueSource(event_q), framer, frame_q, opts.framer.drop_policy, &report.frame);
            } catch (...) {
                framer_failure = std::current_exception();
            }
            frame_q.close();
            event_q.close();
        });

        std::exception_ptr consumer_failure;
        while (auto f = frame_q.pop()) {
            if (consumer_failure) {
                continue;
            }
            try {
                consume(*f);
            } catch (...) {
                consumer_failure = std::current_exception();
                event_q.close();
                frame_q.close();
            }
        }
        decode_thread.join();
        frame_thread.join();
        failure = decode_failure ? decode_failure : framer_failure ? framer_failure : consumer_failure;
    }

    report.wall_seconds = seconds_since(t_begin);
    report.decoder = decoder.stats();
    report.events = report.decoder.events_emitted;
    report.framer = framer.stats();
    if (failure) {
        std::rethrow_exception(failure);
    }
    return report;
}

} // namespace evf
