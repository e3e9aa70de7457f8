#pragma once

#include "evframe/framer.hpp"
#include "evframe/nn/kernels.hpp"
#include "evframe/nn/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace evf::nn {

struct Prediction {
    int class_id = 0;
    std::vector<std::int32_t> logits;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Index of the largest logit; ties go to the lowest index.
inline int argmax(std::span<const std::int32_t> logits) noexcept {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Runs one model. Weights are repacked once at construction; scratch buffers
/// are private, so use one Executor per thread (the model itself is shared read-only).
class Executor {
public:
    explicit Executor(const QuantizedModel& model, ExecOptions opts = {}) : model_(&model), opts_(opts) {
        validate(model);
        for (const auto& l : model.layers) {
            switch (l.kind) {
            case LayerKind::conv2d:
                steps_.emplace_back(detail::pack_conv(l));
                break;
            case LayerKind::depthwise_separable:
                steps_.emplace_back(DwSep{detail::pack_depthwise(l), detail::pack_pointwise(l)});
                break;
            case LayerKind::global_avg_pool:
                steps_.emplace_back(Pool{});
                break;
            case LayerKind::linear:
                steps_.emplace_back(&l);
                break;
            }
        }
    }

    Prediction run(const Tensor3& input) {
        const QuantizedModel& m = *model_;
        if (input.channels != m.input_channels || input.height != m.input_height || input.width != m.input_width) {
            throw ModelError(ModelError::Kind::shape_mismatch,
                             "input " + std::to_string(input.channels) + "x" + std::to_string(input.height) + "x" +
                                 std::to_string(input.width) + " does not match model " + m.name + " input " +
                                 std::to_string(m.input_channels) + "x" + std::to_string(m.input_height) + "x" +
                                 std::to_string(m.input_width));
        }
        const Tensor3* cur = &input;
        std::vector<std::uint8_t> pooled;
        Prediction result;
        for (auto& step : steps_) {
            Tensor3& next = cur == &ping_ ? pong_ : ping_;
            if (auto* conv = std::get_if<detail::PackedConv>(&step)) {
                detail::conv_packed(*cur, *conv, next, scratch_, opts_);
                cur = &next;
            } else if (auto* ds = std::get_if<DwSep>(&step)) {
                detail::depthwise_packed(*cur, ds->dw, mid_, scratch_, opts_);
                detail::pointwise_packed(mid_, ds->pw, next, scratch_, opts_);
                cur = &next;
            } else if (std::holds_alternative<Pool>(step)) {
                pooled = global_avg_pool(*cur);
            } else {
                result.logits = linear_q8(pooled, *std::get<const LayerDesc*>(step));
            }
        }
        result.class_id = argmax(result.logits);
        return result;
    }

    [[nodiscard]] const QuantizedModel& model() const noexcept { return *model_; }

private:
    struct DwSep {
        detail::PackedDepthwise dw;
        detail::PackedPointwise pw;
    };
    struct Pool {};
    using Step = std::variant<detail::PackedConv, DwSep, Pool, const LayerDesc*>;

    const QuantizedModel* model_;
    ExecOptions opts_;
    std::vector<Step> steps_;
    Tensor3 ping_, pong_, mid_;
    detail::Scratch scratch_;
};

inline Prediction infer(const QuantizedModel& model, const Tensor3& input, ExecOptions opts = {}) {
    Executor exec(model, opts);
    return exec.run(input);
}

/// View a frame's planes as a model input tensor.
inline Tensor3 to_tensor(const Frame& f) {
    Tensor3 t;
    t.channels = f.channels;
    t.height = f.height;
    t.width = f.width;
    t.data = f.data;
    return t;
}

} // namespace evf::nn
