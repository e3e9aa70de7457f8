#pragma once

#include "evframe/nn/model.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace evf::nn {

/// How convolutions treat zero activations. Results are bit-identical in every
/// mode; only the loop structure differs.
enum class ZeroSkip : std::uint8_t {
    never,    // dense gather over every input
    always,   // scatter from non-zero inputs only
    adaptive, // per layer, scatter when the input is mostly zeros
};

struct ExecOptions {
    ZeroSkip zero_skip = ZeroSkip::adaptive;
    /// adaptive: scatter when at most this fraction of inputs is non-zero.
    double sparse_threshold = 0.125;
};

/// ReLU, rounding right shift (ties toward +inf), clamp to u8.
constexpr std::uint8_t requantize(std::int64_t acc, int shift, bool relu) noexcept {
    if (relu && acc < 0) {
        acc = 0;
    }
    if (shift > 0) {
        acc = (acc + (std::int64_t{1} << (shift - 1))) >> shift;
    }
    return static_cast<std::uint8_t>(std::clamp<std::int64_t>(acc, 0, 255));
}

namespace detail {

// int8 x u8 always fits in int16; writing the product this way lets the
// compiler use 16-bit widening multiplies.
inline std::int32_t mul(std::int8_t w, std::uint8_t v) noexcept {
    return static_cast<std::int32_t>(static_cast<std::int16_t>(w)) * static_cast<std::int16_t>(v);
}

inline void reshape(Tensor3& t, int c, int h, int w) {
    t.channels = c;
    t.height = h;
    t.width = w;
    t.data.resize(static_cast<std::size_t>(c) * h * w);
}

/// Standard conv with weights reordered to [ic][ky][kx][oc] so the output
/// channel loop is contiguous.
struct PackedConv {
    int in_ch = 0, out_ch = 0, kernel = 3, stride = 1, padding = 1, shift = 0;
    bool relu = true;
    std::vector<std::int8_t> w;    // [ic][ky][kx][oc]
    std::vector<std::int8_t> w_oc; // [oc][ic][ky][kx]
    std::vector<std::int32_t> bias;
};

struct PackedDepthwise {
    int channels = 0, kernel = 3, stride = 1, padding = 1, shift = 0;
    bool relu = true;
    std::vector<std::int8_t> w; // [c][ky][kx]
    std::vector<std::int32_t> bias;
};

struct PackedPointwise {
    int in_ch = 0, out_ch = 0, shift = 0;
    bool relu = true;
    std::vector<std::int8_t> w;    // [ic][oc]
    std::vector<std::int8_t> w_oc; // [oc][ic]
    std::vector<std::int32_t> bias;
};

inline PackedConv pack_conv(const LayerDesc& l) {
    PackedConv p{l.in_ch, l.out_ch, l.kernel, l.stride, l.padding, l.rescale_shift, l.relu, {}, l.weights, l.bias};
    const int k2 = l.kernel * l.kernel;
    p.w.resize(l.weights.size());
    for (int oc = 0; oc < l.out_ch; ++oc) {
        for (int ic = 0; ic < l.in_ch; ++ic) {
            for (int t = 0; t < k2; ++t) {
                p.w[(static_cast<std::size_t>(ic) * k2 + t) * l.out_ch + oc] =
                    l.weights[(static_cast<std::size_t>(oc) * l.in_ch + ic) * k2 + t];
            }
        }
    }
    return p;
}

inline PackedDepthwise pack_depthwise(const LayerDesc& l) {
    return PackedDepthwise{l.in_ch, l.kernel, l.stride, l.padding, l.dw_rescale_shift, l.relu, l.dw_weights, l.dw_bias};
}

inline PackedPointwise pack_pointwise(const LayerDesc& l) {
    PackedPointwise p{l.in_ch, l.out_ch, l.rescale_shift, l.relu, {}, l.weights, l.bias};
    p.w.resize(l.weights.size());
    for (int oc = 0; oc < l.out_ch; ++oc) {
        for (int ic = 0; ic < l.in_ch; ++ic) {
            p.w[static_cast<std::size_t>(ic) * l.out_ch + oc] = l.weights[static_cast<std::size_t>(oc) * l.in_ch + ic];
        }
    }
    return p;
}

/// For every input coordinate, the (kernel tap, output coordinate) pairs it feeds.
struct TapTable {
    std::vector<std::uint32_t> start; // size in + 1
    std::vector<std::uint16_t> tap;
    std::vector<std::uint16_t> out;
};

inline TapTable build_taps(int in, int out_dim, int k, int s, int pad) {
    TapTable t;
    t.start.reserve(static_cast<std::size_t>(in) + 1);
    for (int i = 0; i < in; ++i) {
        t.start.push_back(static_cast<std::uint32_t>(t.tap.size()));
        for (int kk = 0; kk < k; ++kk) {
            const int n = i + pad - kk;
            if (n >= 0 && n % s == 0 && n / s < out_dim) {
                t.tap.push_back(static_cast<std::uint16_t>(kk));
                t.out.push_back(static_cast<std::uint16_t>(n / s));
            }
        }
    }
    t.start.push_back(static_cast<std::uint32_t>(t.tap.size()));
    return t;
}

/// Zero-bordered copy of one plane.
inline void pad_plane(const std::uint8_t* src, int h, int w, int pad, std::uint8_t* dst) {
    const int pw = w + 2 * pad;
    std::fill(dst, dst + static_cast<std::ptrdiff_t>(pad) * pw, 0);
    for (int y = 0; y < h; ++y) {
        std::uint8_t* row = dst + static_cast<std::ptrdiff_t>(y + pad) * pw;
        std::fill(row, row + pad, 0);
        std::copy(src + static_cast<std::ptrdiff_t>(y) * w, src + static_cast<std::ptrdiff_t>(y + 1) * w, row + pad);
        std::fill(row + pad + w, row + pw, 0);
    }
    std::fill(dst + static_cast<std::ptrdiff_t>(h + pad) * pw, dst + static_cast<std::ptrdiff_t>(h + 2 * pad) * pw, 0);
}

inline bool use_scatter(std::span<const std::uint8_t> data, const ExecOptions& opts) {
    switch (opts.zero_skip) {
    case ZeroSkip::never: return false;
    case ZeroSkip::always: return true;
    case ZeroSkip::adaptive: break;
    }
    const auto nonzero = static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](auto v) { return v != 0; }));
    return static_cast<double>(nonzero) <= opts.sparse_threshold * static_cast<double>(data.size());
}

/// Reusable buffers for one executor.
struct Scratch {
    std::vector<std::int32_t> acc;
    std::vector<std::uint8_t> padded;
};

/// Writes requantized outputs from a [pixel][oc] accumulator into a CHW tensor.
inline void drain_hwc(std::span<const std::int32_t> acc, std::span<const std::int32_t> bias, int shift, bool relu,
                      Tensor3& out) {
    const std::size_t plane = out.plane();
    const auto oc_n = static_cast<std::size_t>(out.channels);
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        std::uint8_t* dst = out.data.data() + oc * plane;
        const std::int64_t b = bias[oc];
        for (std::size_t px = 0; px < plane; ++px) {
            dst[px] = requantize(b + acc[px * oc_n + oc], shift, relu);
        }
    }
}

inline void conv_packed(const Tensor3& in, const PackedConv& pc, Tensor3& out, Scratch& scratch,
                        const ExecOptions& opts) {
    const int k = pc.kernel;
    const int s = pc.stride;
    const int pad = pc.padding;
    const int oh = (in.height + 2 * pad - k) / s + 1;
    const int ow = (in.width + 2 * pad - k) / s + 1;
    const int oc_n = pc.out_ch;
    reshape(out, oc_n, oh, ow);
    auto& acc = scratch.acc;

    if (use_scatter(in.data, opts)) {
        acc.assign(static_cast<std::size_t>(oh) * ow * oc_n, 0);
        const TapTable ty = build_taps(in.height, oh, k, s, pad);
        const TapTable tx = build_taps(in.width, ow, k, s, pad);
        for (int ic = 0; ic < in.channels; ++ic) {
            const std::uint8_t* src = in.data.data() + static_cast<std::size_t>(ic) * in.plane();
            for (int iy = 0; iy < in.height; ++iy) {
                for (int ix = 0; ix < in.width; ++ix) {
                    const std::uint8_t v = src[iy * in.width + ix];
                    if (v == 0) {
                        continue;
                    }
                    for (auto a = ty.start[iy]; a < ty.start[iy + 1]; ++a) {
                        for (auto b = tx.start[ix]; b < tx.start[ix + 1]; ++b) {
                            std::int32_t* dst = acc.data() + (static_cast<std::size_t>(ty.out[a]) * ow + tx.out[b]) * oc_n;
                            const std::int8_t* w =
                                pc.w.data() + ((static_cast<std::size_t>(ic) * k + ty.tap[a]) * k + tx.tap[b]) * oc_n;
                            for (int o = 0; o < oc_n; ++o) {
                                dst[o] += mul(w[o], v);
                            }
                        }
                    }
                }
            }
        }
    } else {
        // Split the zero-padded input into stride x stride phase planes so every
        // tap reads a contiguous run: phase (ky % s, kx % s), offset (ky / s, kx / s).
        const int ph = in.height + 2 * pad;
        const int pw = in.width + 2 * pad;
        const int qh = (ph + s - 1) / s;
        const int qw = (pw + s - 1) / s;
        const std::size_t qplane = static_cast<std::size_t>(qh) * qw;
        const std::size_t phases = static_cast<std::size_t>(s) * s;
        scratch.padded.assign(qplane * phases * in.channels, 0);
        for (int ic = 0; ic < in.channels; ++ic) {
            const std::uint8_t* src = in.data.data() + static_cast<std::size_t>(ic) * in.plane();
            std::uint8_t* q = scratch.padded.data() + static_cast<std::size_t>(ic) * phases * qplane;
            for (int y = 0; y < in.height; ++y) {
                const int py = y + pad;
                const std::uint8_t* row = src + static_cast<std::ptrdiff_t>(y) * in.width;
                for (int cx = 0; cx < s; ++cx) {
                    const int x0 = ((cx - pad) % s + s) % s;
                    std::uint8_t* dst = q + static_cast<std::size_t>((py % s) * s + cx) * qplane +
                                        static_cast<std::size_t>(py / s) * qw + (x0 + pad) / s;
                    for (int x = x0; x < in.width; x += s) {
                        *dst++ = row[x];
                    }
                }
            }
        }
        // Dense: one output row at a time, vectorized along the row.
        acc.resize(static_cast<std::size_t>(ow));
        const std::size_t k2 = static_cast<std::size_t>(k) * k;
        for (int oc = 0; oc < oc_n; ++oc) {
            const std::int8_t* w_oc = pc.w_oc.data() + static_cast<std::size_t>(oc) * in.channels * k2;
            const std::int64_t b = pc.bias[static_cast<std::size_t>(oc)];
            for (int oy = 0; oy < oh; ++oy) {
                std::fill(acc.begin(), acc.end(), 0);
                std::int32_t* __restrict row_acc = acc.data();
                for (int ic = 0; ic < in.channels; ++ic) {
                    const std::uint8_t* q = scratch.padded.data() + static_cast<std::size_t>(ic) * phases * qplane;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const std::int8_t wv = w_oc[static_cast<std::size_t>(ic) * k2 + ky * k + kx];
                            if (wv == 0) {
                                continue;
                            }
                            const std::uint8_t* __restrict src =
                                q + static_cast<std::size_t>((ky % s) * s + kx % s) * qplane +
                                static_cast<std::size_t>(oy + ky / s) * qw + kx / s;
                            for (int ox = 0; ox < ow; ++ox) {
                                row_acc[ox] += mul(wv, src[ox]);
                            }
                        }
                    }
                }
                std::uint8_t* dst = out.data.data() + (static_cast<std::size_t>(oc) * oh + oy) * ow;
                for (int ox = 0; ox < ow; ++ox) {
                    dst[ox] = requantize(b + row_acc[ox], pc.shift, pc.relu);
                }
            }
        }
        return;
    }
    drain_hwc(acc, pc.bias, pc.shift, pc.relu, out);
}

inline void depthwise_packed(const Tensor3& in, const PackedDepthwise& pd, Tensor3& out, Scratch& scratch,
                             const ExecOptions& opts) {
    const int k = pd.kernel;
    const int s = pd.stride;
    const int pad = pd.padding;
    const int oh = (in.height + 2 * pad - k) / s + 1;
    const int ow = (in.width + 2 * pad - k) / s + 1;
    reshape(out, in.channels, oh, ow);
    const std::size_t oplane = out.plane();
    auto& acc = scratch.acc;
    acc.resize(oplane);

    const bool scatter = use_scatter(in.data, opts);
    TapTable ty;
    TapTable tx;
    const int ph = in.height + 2 * pad;
    const int pw = in.width + 2 * pad;
    if (scatter) {
        ty = build_taps(in.height, oh, k, s, pad);
        tx = build_taps(in.width, ow, k, s, pad);
    } else {
        scratch.padded.resize(static_cast<std::size_t>(ph) * pw);
    }

    for (int c = 0; c < in.channels; ++c) {
        const std::int8_t* w = pd.w.data() + static_cast<std::size_t>(c) * k * k;
        const std::uint8_t* src = in.data.data() + static_cast<std::size_t>(c) * in.plane();
        std::fill(acc.begin(), acc.end(), 0);
        if (scatter) {
            for (int iy = 0; iy < in.height; ++iy) {
                for (int ix = 0; ix < in.width; ++ix) {
                    const std::uint8_t v = src[iy * in.width + ix];
                    if (v == 0) {
                        continue;
                    }
                    for (auto a = ty.start[iy]; a < ty.start[iy + 1]; ++a) {
                        for (auto b = tx.start[ix]; b < tx.start[ix + 1]; ++b) {
                            acc[static_cast<std::size_t>(ty.out[a]) * ow + tx.out[b]] += mul(w[ty.tap[a] * k + tx.tap[b]], v);
                        }
                    }
                }
            }
        } else {
            pad_plane(src, in.height, in.width, pad, scratch.padded.data());
            const std::uint8_t* p = scratch.padded.data();
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const std::int8_t wv = w[ky * k + kx];
                    for (int oy = 0; oy < oh; ++oy) {
                        const std::uint8_t* row = p + static_cast<std::size_t>(oy * s + ky) * pw + kx;
                        std::int32_t* dst = acc.data() + static_cast<std::size_t>(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            dst[ox] += mul(wv, row[ox * s]);
                        }
                    }
                }
            }
        }
        std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(c) * oplane;
        const std::int64_t b = pd.bias[static_cast<std::size_t>(c)];
        for (std::size_t px = 0; px < oplane; ++px) {
            dst[px] = requantize(b + acc[px], pd.shift, pd.relu);
        }
    }
}

inline void pointwise_packed(const Tensor3& in, const PackedPointwise& pp, Tensor3& out, Scratch& scratch,
                             const ExecOptions& opts) {
    reshape(out, pp.out_ch, in.height, in.width);
    const std::size_t plane = in.plane();
    const int oc_n = pp.out_ch;
    auto& acc = scratch.acc;

    if (use_scatter(in.data, opts)) {
        acc.assign(plane * oc_n, 0);
        for (std::size_t px = 0; px < plane; ++px) {
            std::int32_t* a = acc.data() + px * oc_n;
            for (int ic = 0; ic < pp.in_ch; ++ic) {
                const std::uint8_t v = in.data[static_cast<std::size_t>(ic) * plane + px];
                if (v == 0) {
                    continue;
                }
                const std::int8_t* w = pp.w.data() + static_cast<std::size_t>(ic) * oc_n;
                for (int o = 0; o < oc_n; ++o) {
                    a[o] += mul(w[o], v);
                }
            }
        }
        drain_hwc(acc, pp.bias, pp.shift, pp.relu, out);
        return;
    }

    // Dense: one output plane at a time, vectorized along pixels.
    acc.resize(plane);
    for (int oc = 0; oc < oc_n; ++oc) {
        std::fill(acc.begin(), acc.end(), 0);
        const std::int8_t* w = pp.w_oc.data() + static_cast<std::size_t>(oc) * pp.in_ch;
        for (int ic = 0; ic < pp.in_ch; ++ic) {
            const std::int8_t wv = w[ic];
            if (wv == 0) {
                continue;
            }
            const std::uint8_t* src = in.data.data() + static_cast<std::size_t>(ic) * plane;
            for (std::size_t px = 0; px < plane; ++px) {
                acc[px] += mul(wv, src[px]);
            }
        }
        std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(oc) * plane;
        const std::int64_t b = pp.bias[static_cast<std::size_t>(oc)];
        for (std::size_t px = 0; px < plane; ++px) {
            dst[px] = requantize(b + acc[px], pp.shift, pp.relu);
        }
    }
}

} // namespace detail

inline Tensor3 conv2d_q8(const Tensor3& input, const LayerDesc& layer, ExecOptions opts = {}) {
    if (input.channels != layer.in_ch) {
        throw ModelError(ModelError::Kind::shape_mismatch, "conv2d input channel mismatch");
    }
    Tensor3 out;
    detail::Scratch scratch;
    detail::conv_packed(input, detail::pack_conv(layer), out, scratch, opts);
    return out;
}

inline Tensor3 dwsep_conv_q8(const Tensor3& input, const LayerDesc& layer, ExecOptions opts = {}) {
    if (input.channels != layer.in_ch) {
        throw ModelError(ModelError::Kind::shape_mismatch, "dwsep input channel mismatch");
    }
    Tensor3 mid;
    Tensor3 out;
    detail::Scratch scratch;
    detail::depthwise_packed(input, detail::pack_depthwise(layer), mid, scratch, opts);
    detail::pointwise_packed(mid, detail::pack_pointwise(layer), out, scratch, opts);
    return out;
}

/// Per-channel mean, rounded half up.
inline std::vector<std::uint8_t> global_avg_pool(const Tensor3& input) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(input.channels));
    const std::size_t n = input.plane();
    for (int c = 0; c < input.channels; ++c) {
        const std::uint8_t* src = input.data.data() + static_cast<std::size_t>(c) * n;
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += src[i];
        }
        out[static_cast<std::size_t>(c)] = n == 0 ? 0 : static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
    }
    return out;
}

inline std::vector<std::int32_t> linear_q8(std::span<const std::uint8_t> input, const LayerDesc& layer) {
    if (input.size() != static_cast<std::size_t>(layer.in_ch)) {
        throw ModelError(ModelError::Kind::shape_mismatch, "linear input length mismatch");
    }
    std::vector<std::int32_t> logits(static_cast<std::size_t>(layer.out_ch));
    for (int o = 0; o < layer.out_ch; ++o) {
        const std::int8_t* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_ch;
        std::int32_t acc = layer.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < layer.in_ch; ++i) {
            acc += detail::mul(w[i], input[static_cast<std::size_t>(i)]);
        }
        logits[static_cast<std::size_t>(o)] = acc;
    }
    return logits;
}

} // namespace evf::nn
