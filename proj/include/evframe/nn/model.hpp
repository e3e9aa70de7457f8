#pragma once

#include "evframe/error.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evf::nn {

/// u8 activation tensor, CHW layout.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0) {}

    [[nodiscard]] std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
    [[nodiscard]] std::uint8_t at(int c, int y, int x) const noexcept {
        return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int c, int y, int x) noexcept {
        return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x];
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

enum class LayerKind : std::uint8_t {
    conv2d,
    depthwise_separable,
    global_avg_pool,
    linear,
};

inline constexpr std::string_view to_string(LayerKind k) noexcept {
    switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_separable: return "dwsep";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::linear: return "linear";
    }
    return "?";
}

/// One deployed layer with BatchNorm already folded into weights and bias.
///
/// conv2d:              weights [out][in][k][k], bias [out]
/// depthwise_separable: dw_weights [in][k][k], dw_bias [in], then
///                      weights [out][in] (pointwise 1x1), bias [out]
/// linear:              weights [out][in], bias [out]; int32 logits, no requantization
/// global_avg_pool:     no parameters
///
/// Each conv stage computes acc = bias + sum(w * a) in int32, applies ReLU, then
/// requantizes with a rounding right shift and clamps to u8.
struct LayerDesc {
    LayerKind kind = LayerKind::conv2d;
    int in_ch = 0;
    int out_ch = 0;
    int kernel = 3;
    int stride = 1;
    int padding = 1;
    bool relu = true;

    std::vector<std::int8_t> weights;
    std::vector<std::int32_t> bias;
    int rescale_shift = 0;

    std::vector<std::int8_t> dw_weights;
    std::vector<std::int32_t> dw_bias;
    int dw_rescale_shift = 0;

    [[nodiscard]] std::size_t expected_weights() const noexcept {
        const auto k2 = static_cast<std::size_t>(kernel) * kernel;
        switch (kind) {
        case LayerKind::conv2d: return static_cast<std::size_t>(out_ch) * in_ch * k2;
        case LayerKind::depthwise_separable:
        case LayerKind::linear: return static_cast<std::size_t>(out_ch) * in_ch;
        case LayerKind::global_avg_pool: return 0;
        }
        return 0;
    }
    [[nodiscard]] std::size_t expected_dw_weights() const noexcept {
        return kind == LayerKind::depthwise_separable ? static_cast<std::size_t>(in_ch) * kernel * kernel : 0;
    }
    [[nodiscard]] int output_dim(int d) const noexcept { return (d + 2 * padding - kernel) / stride + 1; }

    /// Trainable parameters of the float layer this was exported from: conv
    /// biases everywhere, BatchNorm scale+shift after the standard conv and
    /// after each pointwise conv.
    [[nodiscard]] std::size_t trainable_params() const noexcept {
        const auto k2 = static_cast<std::size_t>(kernel) * kernel;
        const auto in = static_cast<std::size_t>(in_ch);
        const auto out = static_cast<std::size_t>(out_ch);
        switch (kind) {
        case LayerKind::conv2d: return out * in * k2 + out + 2 * out;
        case LayerKind::depthwise_separable: return in * k2 + in + out * in + out + 2 * out;
        case LayerKind::linear: return out * in + out;
        case LayerKind::global_avg_pool: return 0;
        }
        return 0;
    }
};

struct QuantizedModel {
    std::string name;
    int input_channels = 2;
    int input_height = 128;
    int input_width = 128;
    int class_count = 11;
    std::vector<LayerDesc> layers;

    /// Parameter count of the trained float network.
    [[nodiscard]] std::size_t param_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) {
            n += l.trainable_params();
        }
        return n;
    }

    /// Stored int8 weights plus int32 biases.
    [[nodiscard]] std::size_t deployed_param_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) {
            n += l.weights.size() + l.bias.size() + l.dw_weights.size() + l.dw_bias.size();
        }
        return n;
    }
};

struct Shape3 {
    int channels;
    int height;
    int width;
};

/// Checks every layer's parameter sizes and the activation shape chain from the
/// model input to class_count logits. Throws ModelError.
inline void validate(const QuantizedModel& m) {
    auto fail = [&](std::size_t i, const std::string& why) {
        throw ModelError(ModelError::Kind::shape_mismatch,
                         "layer " + std::to_string(i) + " (" + std::string(to_string(m.layers[i].kind)) + "): " + why);
    };
    if (m.input_channels <= 0 || m.input_height <= 0 || m.input_width <= 0 || m.class_count <= 0) {
        throw ModelError(ModelError::Kind::shape_mismatch, "non-positive model input or class count");
    }
    if (m.layers.empty()) {
        throw ModelError(ModelError::Kind::shape_mismatch, "model has no layers");
    }
    Shape3 s{m.input_channels, m.input_height, m.input_width};
    bool logits = false;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerDesc& l = m.layers[i];
        if (logits) {
            fail(i, "layer after the linear classifier");
        }
        switch (l.kind) {
        case LayerKind::conv2d:
        case LayerKind::depthwise_separable:
            if (l.in_ch != s.channels) {
                fail(i, "expects " + std::to_string(l.in_ch) + " input channels, got " + std::to_string(s.channels));
            }
            if (l.kernel <= 0 || l.kernel % 2 == 0 || l.stride <= 0 || l.padding < 0 || l.out_ch <= 0) {
                fail(i, "bad kernel/stride/padding");
            }
            if (!l.relu) {
                fail(i, "u8 activations require ReLU on conv layers");
            }
            if (l.output_dim(s.height) <= 0 || l.output_dim(s.width) <= 0) {
                fail(i, "spatial size collapses");
            }
            s = Shape3{l.out_ch, l.output_dim(s.height), l.output_dim(s.width)};
            break;
        case LayerKind::global_avg_pool:
            s = Shape3{s.channels, 1, 1};
            break;
        case LayerKind::linear:
            if (s.height != 1 || s.width != 1) {
                fail(i, "linear layer needs a pooled input");
            }
            if (l.in_ch != s.channels) {
                fail(i, "expects " + std::to_string(l.in_ch) + " inputs, got " + std::to_string(s.channels));
            }
            if (l.out_ch != m.class_count) {
                fail(i, "produces " + std::to_string(l.out_ch) + " logits, model has " +
                            std::to_string(m.class_count) + " classes");
            }
            logits = true;
            break;
        }
        if (l.weights.size() != l.expected_weights()) {
            fail(i, "weight count " + std::to_string(l.weights.size()) + " != " + std::to_string(l.expected_weights()));
        }
        if (l.dw_weights.size() != l.expected_dw_weights()) {
            fail(i, "depthwise weight count mismatch");
        }
        const std::size_t bias_len = l.kind == LayerKind::global_avg_pool ? 0 : static_cast<std::size_t>(l.out_ch);
        if (l.bias.size() != bias_len) {
            fail(i, "bias length mismatch");
        }
        if (l.dw_bias.size() != (l.kind == LayerKind::depthwise_separable ? static_cast<std::size_t>(l.in_ch) : 0)) {
            fail(i, "depthwise bias length mismatch");
        }
        if (l.rescale_shift < 0 || l.rescale_shift > 31 || l.dw_rescale_shift < 0 || l.dw_rescale_shift > 31) {
            fail(i, "rescale shift outside [0, 31]");
        }
    }
    if (!logits) {
        throw ModelError(ModelError::Kind::shape_mismatch, "model does not end in a linear classifier");
    }
}

} // namespace evf::nn
