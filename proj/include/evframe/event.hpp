#pragma once

#include <cstdint>
#include <ostream>

namespace evf {

/// Native sensor array (1280 x 720, 40 banks of 32 pixels per row).
inline constexpr std::uint16_t sensor_width = 1280;
inline constexpr std::uint16_t sensor_height = 720;

/// Sensor timestamps are 24-bit microsecond counters.
inline constexpr std::uint32_t timestamp_bits = 24;
inline constexpr std::uint32_t timestamp_modulus = 1u << timestamp_bits;
inline constexpr std::uint32_t timestamp_mask = timestamp_modulus - 1;

/// A decoded change-detection event. p is 0 for a decrease, 1 for an increase.
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint8_t p = 0;
    std::uint32_t t = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Event& e) {
    return os << "(" << e.x << "," << e.y << "," << static_cast<int>(e.p) << "," << e.t << ")";
}

} // namespace evf
