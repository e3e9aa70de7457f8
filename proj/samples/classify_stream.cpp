// Synthesize a short stream, push it through decode -> frame -> infer on one
// thread, and print one line per frame.
//
//   classify_stream <model-dir> [moving-bar|blob-orbit|uniform-noise]

#include "evframe/nn/manifest.hpp"
#include "evframe/runner.hpp"
#include "evframe/synth.hpp"

#include <cstdio>

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <model-dir> [pattern]\n", argv[0]);
        return 1;
    }
    try {
        const auto model = evf::nn::load_model(argv[1]);

        evf::synth::SynthConfig synth;
        synth.pattern = evf::synth::parse_pattern(argc > 2 ? argv[2] : "blob-orbit");
        synth.rate = 1e6;
        synth.duration = 0.1;
        const auto bytes = evf::evt3::encode_events(evf::synth::synthesize(synth));

        evf::RunOptions opts;
        opts.threaded = false;
        opts.framer.channels = static_cast<std::uint8_t>(model.input_channels);
        const auto report = evf::run_stream(evf::MemoryReader(bytes), opts, &model,
                                            [](const evf::Frame& f, const evf::nn::Prediction* p) {
                                                std::printf("frame %u  t=[%u, %u]  events=%u  class=%d\n", f.index,
                                                            f.t_start, f.t_end, f.event_count, p->class_id);
                                            });
        std::printf("%llu events, %llu frames, %.1f M events/s\n", static_cast<unsigned long long>(report.events),
                    static_cast<unsigned long long>(report.frames), report.events_per_second() / 1e6);
    } catch (const evf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.error_class());
    }
    return 0;
}
