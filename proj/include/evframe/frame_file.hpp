#pragma once

// EVF1 frame container. Little-endian, one 29-byte header per frame followed by
// channels * height * width u8 samples (channel-planar, row-major). Frames are
// simply concatenated.
//
//   off size field
//     0    4 magic "EVF1"
//     4    1 version (1)
//     5    2 width
//     7    2 height
//     9    1 channels
//    10    1 dtype (0 = u8)
//    11    1 representation kind (0 binary, 1 hist, 2 sets, 3 slts)
//    12    1 mode (0 constant-event, 1 constant-time)
//    13    4 frame_index
//    17    4 t_start
//    21    4 t_end
//    25    4 event_count

#include "evframe/error.hpp"
#include "evframe/framer.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

namespace evf::evf1 {

inline constexpr std::array<char, 4> magic = {'E', 'V', 'F', '1'};
inline constexpr std::uint8_t version = 1;
inline constexpr std::size_t header_size = 29;

namespace detail {

inline void put_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}
inline void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        p[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
}
inline std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace detail

inline std::array<std::uint8_t, header_size> encode_header(const Frame& f) {
    std::array<std::uint8_t, header_size> h{};
    std::memcpy(h.data(), magic.data(), magic.size());
    h[4] = version;
    detail::put_u16(&h[5], f.width);
    detail::put_u16(&h[7], f.height);
    h[9] = f.channels;
    h[10] = 0;
    h[11] = static_cast<std::uint8_t>(f.kind);
    h[12] = static_cast<std::uint8_t>(f.mode);
    detail::put_u32(&h[13], f.index);
    detail::put_u32(&h[17], f.t_start);
    detail::put_u32(&h[21], f.t_end);
    detail::put_u32(&h[25], f.event_count);
    return h;
}

inline void write_frame(std::ostream& os, const Frame& f) {
    if (f.data.size() != f.plane_size() * f.channels) {
        throw FormatError("frame payload does not match its dimensions");
    }
    const auto h = encode_header(f);
    os.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    os.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    if (!os) {
        throw IoError("failed writing EVF1 frame");
    }
}

/// Reads the next frame; returns false at a clean end of stream.
inline bool read_frame(std::istream& is, Frame& f) {
    std::array<std::uint8_t, header_size> h{};
    is.read(reinterpret_cast<char*>(h.data()), static_cast<std::streamsize>(h.size()));
    if (is.gcount() == 0) {
        return false;
    }
    if (static_cast<std::size_t>(is.gcount()) != header_size) {
        throw FormatError("truncated EVF1 header");
    }
    if (std::memcmp(h.data(), magic.data(), magic.size()) != 0) {
        throw FormatError("bad EVF1 magic");
    }
    if (h[4] != version) {
        throw FormatError("unsupported EVF1 version " + std::to_string(h[4]));
    }
    if (h[10] != 0) {
        throw FormatError("unsupported EVF1 dtype " + std::to_string(h[10]));
    }
    if (h[11] > 3 || h[12] > 1) {
        throw FormatError("bad EVF1 kind/mode byte");
    }
    f.width = detail::get_u16(&h[5]);
    f.height = detail::get_u16(&h[7]);
    f.channels = h[9];
    f.kind = static_cast<Representation>(h[11]);
    f.mode = static_cast<AccumulationMode>(h[12]);
    f.index = detail::get_u32(&h[13]);
    f.t_start = detail::get_u32(&h[17]);
    f.t_end = detail::get_u32(&h[21]);
    f.event_count = detail::get_u32(&h[25]);
    f.partial = false;
    f.dropped = false;
    f.data.resize(f.plane_size() * f.channels);
    is.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
    if (static_cast<std::size_t>(is.gcount()) != f.data.size()) {
        throw FormatError("truncated EVF1 payload in frame " + std::to_string(f.index));
    }
    return true;
}

inline std::vector<Frame> read_frames(std::istream& is) {
    std::vector<Frame> out;
    Frame f;
    while (read_frame(is, f)) {
        out.push_back(f);
    }
    return out;
}

} // namespace evf::evf1
