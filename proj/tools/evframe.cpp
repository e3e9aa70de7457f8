// evframe: decode EVT 3.0 streams, build frames, run the int8 classifier,
// synthesize test streams and benchmark the pipeline.
//
//   evframe synth --pattern moving-bar --rate 1e6 --duration 0.1 -o bar.raw
//   evframe frame bar.raw -o bar.evf
//   evframe infer --model fixtures/models/net16_c2 --frames bar.evf
//   evframe infer --model fixtures/models/net16_c2 --raw bar.raw
//   evframe bench --workload all
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 stream/file format, 4 model, 5 pipeline, 70 internal.

#include "evframe/evt3.hpp"
#include "evframe/frame_file.hpp"
#include "evframe/framer.hpp"
#include "evframe/nn/executor.hpp"
#include "evframe/nn/manifest.hpp"
#include "evframe/nn/topology.hpp"
#include "evframe/report.hpp"
#include "evframe/runner.hpp"
#include "evframe/synth.hpp"
#include "evframe/timing.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int exit_internal = 70;

struct Resolution {
    std::uint32_t width;
    std::uint32_t height;
};

Resolution parse_resolution(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) {
            throw std::invalid_argument(s);
        }
        const unsigned long w = std::stoul(s.substr(0, x));
        const unsigned long h = std::stoul(s.substr(x + 1));
        if (w == 0 || h == 0 || w > 2048 || h > 2048) {
            throw std::out_of_range(s);
        }
        return {static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h)};
    } catch (const std::logic_error&) {
        throw evf::GeometryError("resolution must be WxH with sides in 1..2048, got '" + s + "'");
    }
}

struct Globals {
    std::string in_res = "1280x720";
    std::string out_res = "128x128";
    std::string mode = "const-event";
    std::uint32_t n_events = 20000;
    std::uint32_t window = 1000;
    std::string repr = "sets";
    std::uint32_t tau = 16;
    std::uint32_t scale = 1;
    std::optional<std::uint32_t> shift;
    int channels = 2;
    std::size_t queue_cap = 4;
    std::string drop_policy = "block";
    std::uint64_t seed = 1;
    std::string report;
    bool split_polarity_ts = false;
    bool reset_ts = false;

    CLI::Option* window_opt = nullptr;
    CLI::Option* n_events_opt = nullptr;
    CLI::Option* tau_opt = nullptr;
};

class UsageError : public evf::Error {
public:
    explicit UsageError(const std::string& what) : evf::Error(evf::ErrorClass::usage, what) {}
};

evf::Representation parse_repr(const std::string& s) {
    if (s == "binary") return evf::Representation::binary;
    if (s == "hist") return evf::Representation::histogram;
    if (s == "sets") return evf::Representation::sets;
    return evf::Representation::slts;
}

evf::RunOptions make_run_options(const Globals& g) {
    const Resolution in = parse_resolution(g.in_res);
    const Resolution out = parse_resolution(g.out_res);
    if (in.width > 2048 || in.height > 2048) {
        throw UsageError("input resolution exceeds the 11-bit address range");
    }
    if (out.width > in.width || out.height > in.height) {
        throw UsageError("output resolution must not exceed the input resolution");
    }
    const bool const_time = g.mode == "const-time";
    if (const_time && g.n_events_opt->count() > 0) {
        throw UsageError("--n-events applies to --mode const-event only");
    }
    if (!const_time && g.window_opt->count() > 0) {
        throw UsageError("--window applies to --mode const-time only");
    }
    const evf::Representation kind = parse_repr(g.repr);
    const bool decays = kind == evf::Representation::sets || kind == evf::Representation::slts;
    if (!decays && g.tau_opt->count() > 0) {
        throw UsageError("--tau applies to --repr sets|slts only");
    }

    evf::RunOptions opts;
    opts.geometry = evf::GridGeometry(in.width, in.height, out.width, out.height);
    auto& f = opts.framer;
    f.mode = const_time ? evf::AccumulationMode::constant_time : evf::AccumulationMode::constant_event;
    f.n_events = g.n_events;
    f.window = g.window;
    f.surface.kind = kind;
    f.surface.tau_shift = g.tau;
    f.surface.scale = g.scale;
    f.surface.per_polarity_timestamps = g.split_polarity_ts;
    if (g.shift) {
        f.surface.shift = *g.shift;
    } else if (kind == evf::Representation::histogram && !const_time) {
        f.surface.shift = evf::default_histogram_shift(g.n_events, opts.geometry.depth());
    } else {
        f.surface.shift = 0;
    }
    f.channels = static_cast<std::uint8_t>(g.channels);
    f.queue_capacity = g.queue_cap;
    f.drop_policy = g.drop_policy == "drop" ? evf::DropPolicy::drop_frame : evf::DropPolicy::block;
    f.reset_timestamps_on_swap = g.reset_ts;
    for (const auto& w : f.warnings(opts.geometry)) {
        std::cerr << "warning: " << w << "\n";
    }
    return opts;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw evf::IoError("cannot open '" + path + "'");
    }
    return is;
}

/// Output stream: a file, or stdout for "" and "-".
class Output {
public:
    explicit Output(const std::string& path, bool binary = false) {
        if (path.empty() || path == "-") {
            os_ = &std::cout;
            return;
        }
        file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!*file_) {
            throw evf::IoError("cannot create '" + path + "'");
        }
        os_ = file_.get();
    }

    std::ostream& stream() { return *os_; }

    void close() {
        os_->flush();
        if (!*os_) {
            throw evf::IoError("write failed");
        }
        if (file_) {
            file_->close();
        }
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_ = nullptr;
};

void write_report(const Globals& g, const evf::RunReport& report) {
    if (g.report.empty()) {
        return;
    }
    Output out(g.report);
    report.write(out.stream());
    out.close();
}

nlohmann::json prediction_record(const evf::Frame& f, const evf::nn::Prediction& p) {
    return {{"frame", f.index}, {"t_start", f.t_start}, {"t_end", f.t_end}, {"events", f.event_count},
            {"class", p.class_id}, {"logits", p.logits}};
}

// --- decode ----------------------------------------------------------------

int cmd_decode(const Globals& g, const std::string& input, const std::string& output, const std::string& format) {
    const evf::RunOptions opts = make_run_options(g);
    std::ifstream is = open_in(input);
    Output out(output, format == "bin");
    std::ostream& os = out.stream();

    evf::RunReport report;
    report.command = "decode";
    evf::evt3::Decoder decoder(static_cast<std::uint16_t>(opts.geometry.in_width),
                         static_cast<std::uint16_t>(opts.geometry.in_height));
    evf::StreamReader read(is);
    std::vector<std::uint8_t> buf(opts.chunk_bytes);
    std::vector<evf::Event> events;
    std::string text;
    const auto t_begin = evf::Clock::now();
    for (;;) {
        const std::size_t n = read(buf);
        if (n == 0) {
            break;
        }
        events.clear();
        {
            evf::ScopedSample sample(&report.decode);
            decoder.feed(std::span<const std::uint8_t>(buf.data(), n), events);
        }
        if (format == "bin") {
            std::vector<std::uint8_t> rec(events.size() * 8);
            for (std::size_t i = 0; i < events.size(); ++i) {
                const evf::Event& e = events[i];
                const std::uint32_t tp = (e.t & evf::timestamp_mask) | (static_cast<std::uint32_t>(e.p) << 31);
                std::uint8_t* p = &rec[i * 8];
                evf::evf1::detail::put_u16(p, e.x);
                evf::evf1::detail::put_u16(p + 2, e.y);
                evf::evf1::detail::put_u32(p + 4, tp);
            }
            os.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
        } else {
            text.clear();
            for (const evf::Event& e : events) {
                text += std::to_string(e.x);
                text += ',';
                text += std::to_string(e.y);
                text += ',';
                text += std::to_string(e.p);
                text += ',';
                text += std::to_string(e.t);
                text += '\n';
            }
            os << text;
        }
    }
    decoder.finish();
    out.close();
    report.wall_seconds = evf::seconds_since(t_begin);
    report.decoder = decoder.stats();
    report.events = report.decoder.events_emitted;
    std::cerr << evf::RunReport::decode_stats_record(report.decoder).dump() << "\n";
    write_report(g, report);
    return 0;
}

// --- frame -----------------------------------------------------------------

int cmd_frame(const Globals& g, const std::string& input, const std::string& output, bool single_thread) {
    evf::RunOptions opts = make_run_options(g);
    opts.threaded = !single_thread;
    std::ifstream is = open_in(input);
    Output out(output, true);
    evf::RunReport report = evf::run_stream(evf::StreamReader(is), opts, nullptr,
                                            [&](const evf::Frame& f, const evf::nn::Prediction*) {
                                                evf::evf1::write_frame(out.stream(), f);
                                            });
    report.command = "frame";
    out.close();
    write_report(g, report);
    return 0;
}

// --- infer -----------------------------------------------------------------

int cmd_infer(const Globals& g, const std::string& model_dir, const std::string& frames_path,
              const std::string& raw_path, const std::string& output, bool single_thread) {
    if (frames_path.empty() == raw_path.empty()) {
        throw UsageError("infer needs exactly one of --frames or --raw");
    }
    const evf::nn::QuantizedModel model = evf::nn::load_model(model_dir);
    Output out(output);
    evf::RunReport report;

    if (!raw_path.empty()) {
        evf::RunOptions opts = make_run_options(g);
        opts.threaded = !single_thread;
        std::ifstream is = open_in(raw_path);
        report = evf::run_stream(evf::StreamReader(is), opts, &model,
                                 [&](const evf::Frame& f, const evf::nn::Prediction* p) {
                                     out.stream() << prediction_record(f, *p).dump() << "\n";
                                 });
    } else {
        std::ifstream is = open_in(frames_path);
        evf::nn::Executor exec(model);
        report.predictions.assign(static_cast<std::size_t>(model.class_count), 0);
        const auto t_begin = evf::Clock::now();
        evf::Frame f;
        while (evf::evf1::read_frame(is, f)) {
            evf::nn::Prediction p;
            {
                evf::ScopedSample sample(&report.infer);
                p = exec.run(evf::nn::to_tensor(f));
            }
            report.count_prediction(p.class_id);
            ++report.frames;
            report.events += f.event_count;
            out.stream() << prediction_record(f, p).dump() << "\n";
        }
        report.wall_seconds = evf::seconds_since(t_begin);
    }
    report.command = "infer";
    out.close();
    write_report(g, report);
    return 0;
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const Globals& g, const std::string& pattern, double rate, double duration, const std::string& output,
              std::string sidecar) {
    const Resolution in = parse_resolution(g.in_res);
    evf::synth::SynthConfig cfg;
    cfg.pattern = evf::synth::parse_pattern(pattern);
    cfg.rate = rate;
    cfg.duration = duration;
    cfg.seed = g.seed;
    cfg.width = static_cast<std::uint16_t>(in.width);
    cfg.height = static_cast<std::uint16_t>(in.height);
    const std::vector<evf::Event> events = evf::synth::synthesize(cfg);
    const std::vector<std::uint8_t> bytes = evf::evt3::encode_events(events, cfg.width, cfg.height);

    Output out(output, true);
    out.stream().write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.close();

    if (sidecar.empty() && !output.empty() && output != "-") {
        sidecar = output + ".json";
    }
    const nlohmann::json truth = {{"pattern", evf::synth::to_string(cfg.pattern)},
                                  {"rate", cfg.rate},
                                  {"duration", cfg.duration},
                                  {"seed", cfg.seed},
                                  {"width", cfg.width},
                                  {"height", cfg.height},
                                  {"event_count", events.size()},
                                  {"bytes", bytes.size()},
                                  {"window", g.window},
                                  {"window_counts", evf::synth::window_counts(events, g.window)}};
    if (!sidecar.empty()) {
        Output side(sidecar);
        side.stream() << truth.dump() << "\n";
        side.close();
    } else {
        std::cerr << truth.dump() << "\n";
    }
    return 0;
}

// --- bench -----------------------------------------------------------------

evf::RunReport bench_decode(const std::vector<std::uint8_t>& bytes, const evf::RunOptions& opts) {
    evf::RunReport report;
    report.command = "bench";
    report.workload = "decode";
    evf::evt3::Decoder decoder(static_cast<std::uint16_t>(opts.geometry.in_width),
                         static_cast<std::uint16_t>(opts.geometry.in_height));
    std::vector<evf::Event> events;
    events.reserve(opts.chunk_bytes);
    const auto t_begin = evf::Clock::now();
    for (std::size_t pos = 0; pos < bytes.size(); pos += opts.chunk_bytes) {
        const std::size_t n = std::min(opts.chunk_bytes, bytes.size() - pos);
        events.clear();
        evf::ScopedSample sample(&report.decode);
        decoder.feed(std::span<const std::uint8_t>(bytes.data() + pos, n), events);
    }
    report.wall_seconds = evf::seconds_since(t_begin);
    report.decoder = decoder.stats();
    report.events = report.decoder.events_emitted;
    return report;
}

evf::RunReport bench_frame(const std::vector<evf::Event>& events, const evf::RunOptions& opts) {
    evf::RunReport report;
    report.command = "bench";
    report.workload = "frame";
    evf::Framer framer(opts.framer, opts.geometry);
    framer.record_quantize(&report.quantize);
    constexpr std::size_t batch = 4096;
    const auto t_begin = evf::Clock::now();
    for (std::size_t pos = 0; pos < events.size(); pos += batch) {
        const std::size_t end = std::min(events.size(), pos + batch);
        evf::ScopedSample sample(&report.frame);
        for (std::size_t i = pos; i < end; ++i) {
            if (framer.push(events[i])) {
                ++report.frames;
            }
        }
    }
    if (framer.flush()) {
        ++report.frames;
    }
    report.wall_seconds = evf::seconds_since(t_begin);
    report.framer = framer.stats();
    report.framer.frames_emitted = report.frames;
    report.events = events.size();
    return report;
}

int cmd_bench(const Globals& g, const std::string& workload, const std::string& pattern, std::uint64_t n_events,
              const std::string& model_dir, bool single_thread) {
    if (workload != "decode" && workload != "frame" && workload != "full" && workload != "all") {
        throw UsageError("--workload must be decode | frame | full | all");
    }
    evf::RunOptions opts = make_run_options(g);
    opts.threaded = !single_thread;

    evf::synth::SynthConfig cfg;
    cfg.pattern = evf::synth::parse_pattern(pattern);
    cfg.seed = g.seed;
    cfg.width = static_cast<std::uint16_t>(opts.geometry.in_width);
    cfg.height = static_cast<std::uint16_t>(opts.geometry.in_height);
    cfg.duration = 10.0;
    cfg.rate = static_cast<double>(n_events) / cfg.duration;
    const std::vector<evf::Event> events = evf::synth::synthesize(cfg);
    const std::vector<std::uint8_t> bytes = evf::evt3::encode_events(events, cfg.width, cfg.height);

    std::vector<evf::RunReport> reports;
    if (workload == "decode" || workload == "all") {
        reports.push_back(bench_decode(bytes, opts));
    }
    if (workload == "frame" || workload == "all") {
        reports.push_back(bench_frame(events, opts));
    }
    if (workload == "full" || workload == "all") {
        evf::nn::QuantizedModel model;
        if (model_dir.empty()) {
            model = evf::nn::make_topology(evf::nn::Topology::net16, opts.framer.channels, 11,
                                           static_cast<int>(opts.geometry.out_height),
                                           static_cast<int>(opts.geometry.out_width));
            evf::nn::randomize_weights(model, g.seed);
        } else {
            model = evf::nn::load_model(model_dir);
        }
        evf::RunReport r = evf::run_stream(evf::MemoryReader(bytes), opts, &model,
                                           [](const evf::Frame&, const evf::nn::Prediction*) {});
        r.command = "bench";
        r.workload = "full";
        reports.push_back(std::move(r));
    }

    Output side(g.report);
    for (const auto& r : reports) {
        for (auto rec : r.records()) {
            rec["workload"] = r.workload;
            rec["pattern"] = pattern;
            std::cout << rec.dump() << "\n";
            if (!g.report.empty()) {
                side.stream() << rec.dump() << "\n";
            }
        }
    }
    if (!g.report.empty()) {
        side.close();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-camera stream decoding, frame generation and int8 inference"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--in-res", g.in_res, "sensor resolution WxH")->capture_default_str();
    app.add_option("--out-res", g.out_res, "frame resolution WxH")->capture_default_str();
    app.add_option("--mode", g.mode, "accumulation mode")
        ->check(CLI::IsMember({"const-event", "const-time"}))
        ->capture_default_str();
    g.n_events_opt = app.add_option("--n-events", g.n_events, "events per frame (const-event)")
                         ->check(CLI::PositiveNumber)
                         ->capture_default_str();
    g.window_opt = app.add_option("--window", g.window, "window in timestamp ticks (const-time)")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
    app.add_option("--repr", g.repr, "representation")
        ->check(CLI::IsMember({"binary", "hist", "sets", "slts"}))
        ->capture_default_str();
    g.tau_opt = app.add_option("--tau", g.tau, "decay shift: one step per 2^tau ticks")
                    ->check(CLI::Range(0, 23))
                    ->capture_default_str();
    app.add_option("--scale", g.scale, "quantizer multiplier")->capture_default_str();
    app.add_option("--shift", g.shift, "quantizer right shift (default: auto for hist, else 0)");
    app.add_option("--channels", g.channels, "frame channels")->check(CLI::IsMember({1, 2}))->capture_default_str();
    app.add_option("--queue-cap", g.queue_cap, "pipeline queue capacity")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--drop-policy", g.drop_policy, "full output queue: block or drop the frame")
        ->check(CLI::IsMember({"block", "drop"}))
        ->capture_default_str();
    app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
    app.add_option("--report", g.report, "write the run report (JSON lines) to this path");
    app.add_flag("--split-polarity-ts", g.split_polarity_ts, "separate last-timestamp grids per polarity");
    app.add_flag("--reset-ts", g.reset_ts, "zero the timestamp grid at every frame boundary");

    std::string input, output, format = "csv";
    auto* decode = app.add_subcommand("decode", "decode an EVT 3.0 stream to CSV (x,y,p,t) or binary");
    decode->add_option("input", input, "raw stream")->required();
    decode->add_option("-o,--out", output, "output path (default stdout)");
    decode->add_option("--format", format, "csv | bin (8 bytes: u16 x, u16 y, u32 t with p in bit 31)")
        ->check(CLI::IsMember({"csv", "bin"}))
        ->capture_default_str();

    bool single_thread = false;
    auto* frame = app.add_subcommand("frame", "accumulate a raw stream into EVF1 frames");
    frame->add_option("input", input, "raw stream")->required();
    frame->add_option("-o,--out", output, "EVF1 output path")->required();
    frame->add_flag("--single-thread", single_thread, "run all stages on one thread");

    std::string model_dir, frames_path, raw_path;
    auto* infer = app.add_subcommand("infer", "classify frames; predictions as JSON lines");
    infer->add_option("--model", model_dir, "model bundle directory")->required();
    infer->add_option("--frames", frames_path, "EVF1 input");
    infer->add_option("--raw", raw_path, "raw stream input (decode, frame and infer in one pipeline)");
    infer->add_option("-o,--out", output, "predictions path (default stdout)");
    infer->add_flag("--single-thread", single_thread, "run all stages on one thread");

    std::string pattern = "moving-bar", sidecar;
    double rate = 1e6, duration = 0.1;
    auto* synth = app.add_subcommand("synth", "write a deterministic synthetic EVT 3.0 stream");
    synth->add_option("--pattern", pattern, "moving-bar | blob-orbit | uniform-noise")->capture_default_str();
    synth->add_option("--rate", rate, "events per second")->capture_default_str();
    synth->add_option("--duration", duration, "seconds")->capture_default_str();
    synth->add_option("-o,--out", output, "raw output path")->required();
    synth->add_option("--sidecar", sidecar, "ground-truth JSON path (default <out>.json)");

    std::string workload = "all";
    std::uint64_t bench_events = 10'000'000;
    auto* bench = app.add_subcommand("bench", "time the decode, frame and full pipeline workloads");
    bench->add_option("--workload", workload, "decode | frame | full | all")->capture_default_str();
    bench->add_option("--pattern", pattern, "synthetic workload pattern")->capture_default_str();
    bench->add_option("--events", bench_events, "events in the workload")->capture_default_str();
    bench->add_option("--model", model_dir, "model bundle (default: random net16)");
    bench->add_flag("--single-thread", single_thread, "run the full pipeline on one thread");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(evf::ErrorClass::usage);
    }

    try {
        if (*decode) return cmd_decode(g, input, output, format);
        if (*frame) return cmd_frame(g, input, output, single_thread);
        if (*infer) return cmd_infer(g, model_dir, frames_path, raw_path, output, single_thread);
        if (*synth) return cmd_synth(g, pattern, rate, duration, output, sidecar);
        if (*bench) return cmd_bench(g, workload, pattern, bench_events, model_dir, single_thread);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return static_cast<int>(evf::ErrorClass::usage);
    } catch (const evf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return 0;
}
