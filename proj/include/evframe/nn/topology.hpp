#pragma once

#include "evframe/error.hpp"
#include "evframe/nn/model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace evf::nn {

/// net16: stem conv then five depthwise-separable blocks ending at 128 channels.
/// net70: deeper variant ending at 256 channels.
/// net16w: net16 with the 16-wide stem and first block widened to 32; used for
/// 8-channel inputs.
enum class Topology { net16, net70, net16w };

struct BlockSpec {
    int out_ch;
    int stride;
};

inline Topology parse_topology(std::string_view s) {
    if (s == "net16") return Topology::net16;
    if (s == "net70") return Topology::net70;
    if (s == "net16w") return Topology::net16w;
    throw GeometryError("unknown topology '" + std::string(s) + "' (net16|net70|net16w)");
}

inline std::string_view to_string(Topology t) noexcept {
    switch (t) {
    case Topology::net16: return "net16";
    case Topology::net70: return "net70";
    case Topology::net16w: return "net16w";
    }
    return "?";
}

/// Build the layer chain with zero weights.
inline QuantizedModel make_topology(Topology topo, int input_channels, int class_count = 11, int height = 128,
                                    int width = 128) {
    int stem = 16;
    std::vector<BlockSpec> blocks;
    switch (topo) {
    case Topology::net16:
        blocks = {{16, 2}, {32, 2}, {32, 2}, {64, 1}, {128, 2}};
        break;
    case Topology::net70:
        blocks = {{16, 1}, {32, 2}, {32, 1}, {64, 2}, {128, 1}, {128, 1}, {256, 2}};
        break;
    case Topology::net16w:
        stem = 32;
        blocks = {{32, 2}, {32, 2}, {32, 2}, {64, 1}, {128, 2}};
        break;
    }

    QuantizedModel m;
    m.name = std::string(to_string(topo)) + "-c" + std::to_string(input_channels);
    m.input_channels = input_channels;
    m.input_height = height;
    m.input_width = width;
    m.class_count = class_count;

    auto conv_like = [](LayerKind kind, int in, int out, int stride) {
        LayerDesc l;
        l.kind = kind;
        l.in_ch = in;
        l.out_ch = out;
        l.kernel = 3;
        l.stride = stride;
        l.padding = 1;
        l.relu = true;
        l.weights.assign(l.expected_weights(), 0);
        l.bias.assign(static_cast<std::size_t>(out), 0);
        l.dw_weights.assign(l.expected_dw_weights(), 0);
        l.dw_bias.assign(kind == LayerKind::depthwise_separable ? static_cast<std::size_t>(in) : 0, 0);
        return l;
    };

    m.layers.push_back(conv_like(LayerKind::conv2d, input_channels, stem, 2));
    int ch = stem;
    for (const auto& b : blocks) {
        m.layers.push_back(conv_like(LayerKind::depthwise_separable, ch, b.out_ch, b.stride));
        ch = b.out_ch;
    }
    LayerDesc pool;
    pool.kind = LayerKind::global_avg_pool;
    m.layers.push_back(pool);

    LayerDesc fc;
    fc.kind = LayerKind::linear;
    fc.in_ch = ch;
    fc.out_ch = class_count;
    fc.kernel = 1;
    fc.padding = 0;
    fc.relu = false;
    fc.weights.assign(fc.expected_weights(), 0);
    fc.bias.assign(static_cast<std::size_t>(class_count), 0);
    m.layers.push_back(fc);
    return m;
}

/// Fill weights and biases with seeded random values. Shifts are sized from
/// each stage's fan-in so activations stay inside the u8 range instead of
/// saturating or collapsing to zero.
inline void randomize_weights(QuantizedModel& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> wdist(-48, 48);

    auto fill = [&](std::vector<std::int8_t>& w) {
        for (auto& x : w) {
            x = static_cast<std::int8_t>(wdist(rng));
        }
    };
    // Typical |acc| for fan-in F with mid-range activations; pick the shift
    // that brings it to about 64.
    auto shift_for = [](std::size_t fan_in) {
        const double typical = std::sqrt(static_cast<double>(fan_in)) * 28.0 * 100.0;
        return std::clamp(static_cast<int>(std::lround(std::log2(typical / 64.0))), 0, 31);
    };
    auto fill_bias = [&](std::vector<std::int32_t>& b, int shift) {
        std::uniform_int_distribution<std::int32_t> bdist(-(16 << shift), 48 << shift);
        for (auto& x : b) {
            x = bdist(rng);
        }
    };

    for (auto& l : m.layers) {
        switch (l.kind) {
        case LayerKind::conv2d:
            fill(l.weights);
            l.rescale_shift = shift_for(static_cast<std::size_t>(l.in_ch) * l.kernel * l.kernel);
            fill_bias(l.bias, l.rescale_shift);
            break;
        case LayerKind::depthwise_separable:
            fill(l.dw_weights);
            l.dw_rescale_shift = shift_for(static_cast<std::size_t>(l.kernel) * l.kernel);
            fill_bias(l.dw_bias, l.dw_rescale_shift);
            fill(l.weights);
            l.rescale_shift = shift_for(static_cast<std::size_t>(l.in_ch));
            fill_bias(l.bias, l.rescale_shift);
            break;
        case LayerKind::linear: {
            fill(l.weights);
            std::uniform_int_distribution<std::int32_t> bdist(-2000, 2000);
            for (auto& x : l.bias) {
                x = bdist(rng);
            }
            break;
        }
        case LayerKind::global_avg_pool:
            break;
        }
    }
}

} // namespace evf::nn
