#pragma once

#include "evframe/event.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace testutil {

/// Sorted random in-bounds events. `bank_share` is the probability that the
/// next event reuses the previous event's (y, t, p) and bank.
inline std::vector<evf::Event> random_events(std::size_t n, std::uint64_t seed, double bank_share = 0.0,
                                             std::uint16_t w = evf::sensor_width, std::uint16_t h = evf::sensor_height,
                                             std::uint32_t max_dt = 50) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1), ps(0, 1);
    std::uniform_int_distribution<std::uint32_t> dts(0, max_dt);
    std::bernoulli_distribution share(bank_share);
    std::vector<evf::Event> out;
    out.reserve(n);
    std::uint32_t t = 0;
    while (out.size() < n) {
        if (!out.empty() && share(rng)) {
            const auto prev = out.back();
            const int bank = prev.x / 32;
            const int x = bank * 32 + static_cast<int>(rng() % 32);
            if (x < w) {
                out.push_back(evf::Event{static_cast<std::uint16_t>(x), prev.y, prev.p, prev.t});
                continue;
            }
        }
        t = std::min<std::uint32_t>(t + dts(rng), evf::timestamp_mask);
        out.push_back(evf::Event{static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)),
                                 static_cast<std::uint8_t>(ps(rng)), t});
    }
    return out;
}

} // namespace testutil
