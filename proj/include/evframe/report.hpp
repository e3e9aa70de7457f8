#pragma once

// Run reports as line-delimited JSON: one self-describing record per line.
//
//   {"record":"run", ...}          totals and rates
//   {"record":"stage", ...}        one per stage: decode, frame, quantize, infer
//   {"record":"framer", ...}       FramerStats
//   {"record":"decoder", ...}      evt3::DecodeStats
//   {"record":"predictions", ...}  per-class prediction histogram

#include "evframe/evt3.hpp"
#include "evframe/framer.hpp"
#include "evframe/timing.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace evf {

inline constexpr std::array<std::string_view, 4> stage_names = {"decode", "frame", "quantize", "infer"};

struct RunReport {
    std::string command;
    std::string workload;
    double wall_seconds = 0.0;
    std::uint64_t events = 0;
    std::uint64_t frames = 0;
    /// decode: per input chunk; frame: per event batch; quantize and infer: per frame.
    LatencySeries decode, frame, quantize, infer;
    FramerStats framer;
    evt3::DecodeStats decoder;
    std::vector<std::uint64_t> predictions; // count per class

    [[nodiscard]] double events_per_second() const noexcept {
        return wall_seconds > 0 ? static_cast<double>(events) / wall_seconds : 0.0;
    }
    [[nodiscard]] double frames_per_second() const noexcept {
        return wall_seconds > 0 ? static_cast<double>(frames) / wall_seconds : 0.0;
    }

    [[nodiscard]] const LatencySeries& stage(std::string_view name) const {
        if (name == "decode") return decode;
        if (name == "frame") return frame;
        if (name == "quantize") return quantize;
        return infer;
    }

    void count_prediction(int class_id) {
        const auto c = static_cast<std::size_t>(class_id);
        if (c >= predictions.size()) {
            predictions.resize(c + 1, 0);
        }
        ++predictions[c];
    }

    [[nodiscard]] std::vector<nlohmann::json> records() const {
        using nlohmann::json;
        std::vector<json> out;
        json run = {{"record", "run"},
                    {"command", command},
                    {"wall_s", wall_seconds},
                    {"events", events},
                    {"frames", frames},
                    {"events_per_s", events_per_second()},
                    {"frames_per_s", frames_per_second()}};
        if (!workload.empty()) {
            run["workload"] = workload;
        }
        out.push_back(std::move(run));
        for (std::string_view name : stage_names) {
            const LatencySummary s = stage(name).summary();
            out.push_back({{"record", "stage"},
                           {"stage", name},
                           {"count", s.count},
                           {"total_s", s.total},
                           {"p50_s", s.p50},
                           {"p90_s", s.p90},
                           {"p99_s", s.p99}});
        }
        out.push_back({{"record", "framer"},
                       {"frames_emitted", framer.frames_emitted},
                       {"frames_dropped", framer.frames_dropped},
                       {"frames_sealed", framer.frames_sealed},
                       {"frames_partial", framer.frames_partial},
                       {"events_integrated", framer.events_integrated},
                       {"events_rejected", framer.events_rejected},
                       {"events_dropped", framer.events_dropped},
                       {"events_while_blocked", framer.events_while_blocked},
                       {"holds_input_empty", framer.holds_input_empty},
                       {"holds_output_full", framer.holds_output_full}});
        out.push_back(decode_stats_record(decoder));
        out.push_back({{"record", "predictions"}, {"histogram", predictions}});
        return out;
    }

    void write(std::ostream& os) const {
        for (const auto& r : records()) {
            os << r.dump() << '\n';
        }
    }

    static nlohmann::json decode_stats_record(const evt3::DecodeStats& d) {
        return {{"record", "decoder"},
                {"words_consumed", d.words_consumed},
                {"events_emitted", d.events_emitted},
                {"vectorized_events", d.vectorized_events},
                {"single_events", d.single_events},
                {"trigger_count", d.trigger_count},
                {"auxiliary_word_count", d.auxiliary_word_count},
                {"unknown_word_count", d.unknown_word_count},
                {"out_of_bounds_count", d.out_of_bounds_count},
                {"wrap_count", d.wrap_count}};
    }
};

} // namespace evf
