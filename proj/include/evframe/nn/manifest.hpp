#pragma once

// Model bundle: a JSON manifest plus one little-endian weight blob per
// parameterized layer. Schema in docs/MODEL_FORMAT.md.

#include "evframe/error.hpp"
#include "evframe/nn/model.hpp"

#include <json.hpp>
#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace evf::nn {

inline constexpr const char* manifest_format = "evframe-model";
inline constexpr int manifest_version = 1;
inline constexpr const char* manifest_filename = "model.json";

inline std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

namespace detail {

inline std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

inline void append_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
}

inline void append_i8(std::vector<std::uint8_t>& out, const std::vector<std::int8_t>& v) {
    for (auto x : v) {
        out.push_back(static_cast<std::uint8_t>(x));
    }
}

class BlobReader {
public:
    BlobReader(const std::vector<std::uint8_t>& bytes, std::size_t layer) : bytes_(bytes), layer_(layer) {}

    std::vector<std::int8_t> i8(std::size_t n) {
        need(n);
        std::vector<std::int8_t> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = static_cast<std::int8_t>(bytes_[pos_ + i]);
        }
        pos_ += n;
        return v;
    }

    std::vector<std::int32_t> i32(std::size_t n) {
        need(4 * n);
        std::vector<std::int32_t> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b) {
                u |= static_cast<std::uint32_t>(bytes_[pos_ + 4 * i + b]) << (8 * b);
            }
            v[i] = static_cast<std::int32_t>(u);
        }
        pos_ += 4 * n;
        return v;
    }

    void finish() const {
        if (pos_ != bytes_.size()) {
            throw ModelError(ModelError::Kind::shape_mismatch,
                             "layer " + std::to_string(layer_) + ": blob has " +
                                 std::to_string(bytes_.size() - pos_) + " trailing bytes");
        }
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw ModelError(ModelError::Kind::shape_mismatch,
                             "layer " + std::to_string(layer_) + ": blob too short for its declared shape");
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t layer_;
    std::size_t pos_ = 0;
};

inline LayerKind parse_kind(const std::string& s, std::size_t layer) {
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "dwsep") return LayerKind::depthwise_separable;
    if (s == "global_avg_pool") return LayerKind::global_avg_pool;
    if (s == "linear") return LayerKind::linear;
    throw ModelError(ModelError::Kind::unsupported_kind, "layer " + std::to_string(layer) + ": unsupported kind '" + s + "'");
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + p.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

/// Blob byte layout for one layer: int8 weight arrays first, then int32 biases.
/// dwsep: dw_weights, dw_bias, weights, bias. conv2d/linear: weights, bias.
inline std::vector<std::uint8_t> layer_blob(const LayerDesc& l) {
    std::vector<std::uint8_t> out;
    if (l.kind == LayerKind::depthwise_separable) {
        detail::append_i8(out, l.dw_weights);
        for (auto b : l.dw_bias) {
            detail::append_i32(out, b);
        }
    }
    detail::append_i8(out, l.weights);
    for (auto b : l.bias) {
        detail::append_i32(out, b);
    }
    return out;
}

/// Write model.json and layer blobs into `dir` (created if missing).
inline void save_model(const QuantizedModel& m, const std::filesystem::path& dir) {
    validate(m);
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["format"] = manifest_format;
    j["version"] = manifest_version;
    j["name"] = m.name;
    j["input_channels"] = m.input_channels;
    j["input_height"] = m.input_height;
    j["input_width"] = m.input_width;
    j["class_count"] = m.class_count;
    j["param_count"] = m.param_count();
    j["layers"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerDesc& l = m.layers[i];
        nlohmann::ordered_json lj;
        lj["kind"] = std::string(to_string(l.kind));
        if (l.kind != LayerKind::global_avg_pool) {
            lj["in_ch"] = l.in_ch;
            lj["out_ch"] = l.out_ch;
        }
        if (l.kind == LayerKind::conv2d || l.kind == LayerKind::depthwise_separable) {
            lj["kernel"] = l.kernel;
            lj["stride"] = l.stride;
            lj["padding"] = l.padding;
            lj["relu"] = l.relu;
        }
        if (l.kind == LayerKind::depthwise_separable) {
            lj["dw_rescale_shift"] = l.dw_rescale_shift;
        }
        if (l.kind == LayerKind::conv2d || l.kind == LayerKind::depthwise_separable) {
            lj["rescale_shift"] = l.rescale_shift;
        }
        if (l.kind != LayerKind::global_avg_pool) {
            const auto blob = layer_blob(l);
            char name[64];
            std::snprintf(name, sizeof name, "layer%02zu_%s.bin", i, std::string(to_string(l.kind)).c_str());
            std::ofstream out(dir / name, std::ios::binary);
            out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
            if (!out) {
                throw IoError("cannot write " + (dir / name).string());
            }
            lj["blob"] = name;
            lj["blob_bytes"] = blob.size();
            lj["crc32"] = detail::hex32(crc32_of(blob));
        }
        j["layers"].push_back(lj);
    }
    std::ofstream out(dir / manifest_filename);
    out << j.dump(2) << "\n";
    if (!out) {
        throw IoError("cannot write manifest in " + dir.string());
    }
}

/// Load and validate a bundle. `path` is the bundle directory or its model.json.
inline QuantizedModel load_model(const std::filesystem::path& path) {
    const auto manifest = std::filesystem::is_directory(path) ? path / manifest_filename : path;
    const auto dir = manifest.parent_path();
    nlohmann::json j;
    try {
        std::ifstream in(manifest);
        if (!in) {
            throw IoError("cannot open manifest " + manifest.string());
        }
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(ModelError::Kind::malformed, "manifest " + manifest.string() + ": " + ex.what());
    }

    QuantizedModel m;
    try {
        if (j.at("format").get<std::string>() != manifest_format || j.at("version").get<int>() != manifest_version) {
            throw ModelError(ModelError::Kind::malformed, "unrecognized manifest format/version");
        }
        m.name = j.at("name").get<std::string>();
        m.input_channels = j.at("input_channels").get<int>();
        m.input_height = j.at("input_height").get<int>();
        m.input_width = j.at("input_width").get<int>();
        m.class_count = j.at("class_count").get<int>();
        const auto& layers = j.at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& lj = layers[i];
            LayerDesc l;
            l.kind = detail::parse_kind(lj.at("kind").get<std::string>(), i);
            if (l.kind == LayerKind::global_avg_pool) {
                m.layers.push_back(std::move(l));
                continue;
            }
            l.in_ch = lj.at("in_ch").get<int>();
            l.out_ch = lj.at("out_ch").get<int>();
            if (l.kind != LayerKind::linear) {
                l.kernel = lj.at("kernel").get<int>();
                l.stride = lj.at("stride").get<int>();
                l.padding = lj.at("padding").get<int>();
                l.relu = lj.at("relu").get<bool>();
                l.rescale_shift = lj.at("rescale_shift").get<int>();
            } else {
                l.kernel = 1;
                l.stride = 1;
                l.padding = 0;
                l.relu = false;
            }
            if (l.kind == LayerKind::depthwise_separable) {
                l.dw_rescale_shift = lj.at("dw_rescale_shift").get<int>();
            }
            if (l.in_ch <= 0 || l.out_ch <= 0 || l.kernel <= 0 || l.in_ch > 65536 || l.out_ch > 65536 ||
                l.kernel > 15) {
                throw ModelError(ModelError::Kind::shape_mismatch, "layer " + std::to_string(i) + ": bad dimensions");
            }

            const auto blob_path = dir / lj.at("blob").get<std::string>();
            const auto bytes = detail::read_file(blob_path);
            const auto want_crc = lj.at("crc32").get<std::string>();
            const auto want_len = lj.at("blob_bytes").get<std::size_t>();
            if (bytes.size() != want_len || detail::hex32(crc32_of(bytes)) != want_crc) {
                throw ModelError(ModelError::Kind::checksum_mismatch,
                                 "layer " + std::to_string(i) + ": checksum mismatch for " + blob_path.string());
            }
            detail::BlobReader r(bytes, i);
            if (l.kind == LayerKind::depthwise_separable) {
                l.dw_weights = r.i8(l.expected_dw_weights());
                l.dw_bias = r.i32(static_cast<std::size_t>(l.in_ch));
            }
            l.weights = r.i8(l.expected_weights());
            l.bias = r.i32(static_cast<std::size_t>(l.out_ch));
            r.finish();
            m.layers.push_back(std::move(l));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError(ModelError::Kind::malformed, "manifest " + manifest.string() + ": " + ex.what());
    }
    validate(m);
    return m;
}

} // namespace evf::nn
