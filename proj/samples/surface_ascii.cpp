// Print the positive plane of one frame as ASCII art, once per representation.
// Brighter characters are larger quantized values.

#include "evframe/framer.hpp"
#include "evframe/synth.hpp"

#include <cstdio>
#include <string_view>

namespace {

void show(const evf::Frame& f) {
    constexpr std::string_view ramp = " .:-=+*#%@";
    const auto plane = f.plane(f.channels - 1);
    // 128x128 squeezed to 64x32 by taking the max of each 2x4 block.
    for (int y = 0; y < f.height; y += 4) {
        for (int x = 0; x < f.width; x += 2) {
            int v = 0;
            for (int dy = 0; dy < 4; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    v = std::max<int>(v, plane[static_cast<std::size_t>(y + dy) * f.width + x + dx]);
                }
            }
            std::putchar(ramp[static_cast<std::size_t>(v) * (ramp.size() - 1) / 255]);
        }
        std::putchar('\n');
    }
}

} // namespace

int main() {
    evf::synth::SynthConfig synth;
    synth.pattern = evf::synth::Pattern::blob_orbit;
    synth.rate = 200000;
    synth.duration = 0.5;
    const auto events = evf::synth::synthesize(synth);

    for (auto kind : {evf::Representation::binary, evf::Representation::histogram, evf::Representation::sets,
                      evf::Representation::slts}) {
        evf::FramerConfig cfg;
        cfg.n_events = static_cast<std::uint32_t>(events.size());
        cfg.surface.kind = kind;
        cfg.surface.tau_shift = 14;
        // stretch small counts and recent-decay values over the u8 range
        cfg.surface.scale = kind == evf::Representation::binary ? 1 : 32;
        evf::Framer framer(cfg);
        for (const auto& e : events) {
            if (auto f = framer.push(e)) {
                std::printf("== %s (%u events)\n", std::string(evf::to_string(kind)).c_str(), f->event_count);
                show(*f);
            }
        }
    }
    return 0;
}
