#pragma once

#include "evframe/error.hpp"
#include "evframe/event.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace evf {

/// Per-axis downsampling lookup: out = m[i] ? i + b[i] : b[i], with m[i] in {0, 1}.
/// The hardware holds i in Q16 and shifts it down before the add; here i is a
/// plain integer, so only the end-to-end mapping matters.
struct MapLut {
    std::uint32_t in_dim = 0;
    std::uint32_t out_dim = 0;
    std::vector<std::uint8_t> m;
    std::vector<std::uint16_t> b;

    /// Unchecked lookup for the per-event hot path.
    [[nodiscard]] std::uint32_t operator[](std::uint32_t i) const noexcept { return m[i] ? i + b[i] : b[i]; }
};

/// Realizes map(i) = floor(i * out_dim / in_dim). Identity maps use the m = 1 branch.
inline MapLut build_map(std::uint32_t in_dim, std::uint32_t out_dim) {
    if (in_dim == 0 || out_dim == 0) {
        throw GeometryError("map dimensions must be positive");
    }
    if (out_dim > in_dim) {
        throw GeometryError("upsampling is not supported (out " + std::to_string(out_dim) + " > in " +
                            std::to_string(in_dim) + ")");
    }
    MapLut lut{in_dim, out_dim, std::vector<std::uint8_t>(in_dim), std::vector<std::uint16_t>(in_dim)};
    for (std::uint32_t i = 0; i < in_dim; ++i) {
        if (in_dim == out_dim) {
            lut.m[i] = 1;
            lut.b[i] = 0;
        } else {
            lut.m[i] = 0;
            lut.b[i] = static_cast<std::uint16_t>(static_cast<std::uint64_t>(i) * out_dim / in_dim);
        }
    }
    return lut;
}

inline std::uint32_t map_coord(const MapLut& lut, std::uint32_t i) {
    if (i >= lut.in_dim) {
        throw GeometryError("coordinate " + std::to_string(i) + " out of range [0, " + std::to_string(lut.in_dim) +
                            ")");
    }
    return lut[i];
}

/// Row-major memory index; a shift when the row width is a power of two.
constexpr std::uint32_t address(std::uint32_t x_out, std::uint32_t y_out, std::uint32_t out_width) noexcept {
    if (std::has_single_bit(out_width)) {
        return (y_out << std::countr_zero(out_width)) + x_out;
    }
    return y_out * out_width + x_out;
}

struct GridGeometry {
    std::uint32_t in_width = sensor_width;
    std::uint32_t in_height = sensor_height;
    std::uint32_t out_width = 128;
    std::uint32_t out_height = 128;
    MapLut x_lut;
    MapLut y_lut;
    std::vector<std::uint32_t> row_base; // y_in -> address of (0, y_out)

    GridGeometry() : GridGeometry(sensor_width, sensor_height, 128, 128) {}

    GridGeometry(std::uint32_t in_w, std::uint32_t in_h, std::uint32_t out_w, std::uint32_t out_h)
        : in_width(in_w), in_height(in_h), out_width(out_w), out_height(out_h), x_lut(build_map(in_w, out_w)),
          y_lut(build_map(in_h, out_h)) {
        row_base.resize(in_h);
        for (std::uint32_t y = 0; y < in_h; ++y) {
            row_base[y] = address(0, y_lut[y], out_w);
        }
    }

    [[nodiscard]] std::size_t depth() const noexcept { return std::size_t{out_width} * out_height; }

    [[nodiscard]] bool contains(const Event& e) const noexcept { return e.x < in_width && e.y < in_height; }

    /// Memory index of an in-bounds sensor event.
    [[nodiscard]] std::uint32_t address_of(const Event& e) const noexcept { return row_base[e.y] + x_lut[e.x]; }
};

} // namespace evf
