#pragma once

#include "evframe/nn/model.hpp"

#include <cstdint>
#include <random>

namespace testutil {

inline evf::nn::Tensor3 random_tensor(int c, int h, int w, std::mt19937_64& rng, double zero_fraction = 0.5) {
    evf::nn::Tensor3 t(c, h, w);
    std::bernoulli_distribution zero(zero_fraction);
    for (auto& v : t.data) v = zero(rng) ? 0 : static_cast<std::uint8_t>(rng() & 0xFF);
    return t;
}

inline evf::nn::LayerDesc random_layer(evf::nn::LayerKind kind, int in, int out, int stride, std::mt19937_64& rng) {
    using evf::nn::LayerKind;
    evf::nn::LayerDesc l;
    l.kind = kind;
    l.in_ch = in;
    l.out_ch = out;
    l.stride = stride;
    if (kind == LayerKind::linear) {
        l.kernel = 1;
        l.padding = 0;
        l.relu = false;
    }
    std::uniform_int_distribution<int> w8(-128, 127);
    std::uniform_int_distribution<std::int32_t> b(-20000, 20000);
    std::uniform_int_distribution<int> sh(0, 12);
    l.weights.resize(l.expected_weights());
    for (auto& v : l.weights) v = static_cast<std::int8_t>(w8(rng));
    l.bias.resize(static_cast<std::size_t>(out));
    for (auto& v : l.bias) v = b(rng);
    l.rescale_shift = kind == LayerKind::linear ? 0 : sh(rng);
    if (kind == LayerKind::depthwise_separable) {
        l.dw_weights.resize(l.expected_dw_weights());
        for (auto& v : l.dw_weights) v = static_cast<std::int8_t>(w8(rng));
        l.dw_bias.resize(static_cast<std::size_t>(in));
        for (auto& v : l.dw_bias) v = b(rng);
        l.dw_rescale_shift = sh(rng);
    }
    return l;
}

} // namespace testutil
