#pragma once

// EVT 3.0 stream codec. Word layouts are documented bit-exactly in docs/FORMAT.md.

#include "evframe/error.hpp"
#include "evframe/event.hpp"

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace evf::evt3 {

/// 4-bit type codes in bits [15:12] of every word.
enum class WordType : std::uint8_t {
    addr_y = 0x0,
    addr_x = 0x2,
    vect_base_x = 0x3,
    vect_12 = 0x4,
    vect_8 = 0x5,
    time_low = 0x6,
    continued_4 = 0x7,
    time_high = 0x8,
    ext_trigger = 0xA,
    others = 0xE,
    continued_12 = 0xF,
};

inline constexpr unsigned bank_width = 32;
inline constexpr std::uint16_t polarity_bit = 1u << 11;
inline constexpr std::uint16_t coord_mask = 0x07FF;

struct EventWord {
    std::uint16_t raw = 0;

    [[nodiscard]] constexpr std::uint8_t type_code() const noexcept { return static_cast<std::uint8_t>(raw >> 12); }
    [[nodiscard]] constexpr std::uint16_t payload() const noexcept { return raw & 0x0FFF; }

    static constexpr EventWord make(WordType type, std::uint16_t payload) noexcept {
        return EventWord{static_cast<std::uint16_t>((static_cast<unsigned>(type) << 12) | (payload & 0x0FFF))};
    }
};

struct DecodeStats {
    std::uint64_t words_consumed = 0;
    std::uint64_t events_emitted = 0;
    std::uint64_t vectorized_events = 0;
    std::uint64_t single_events = 0;
    std::uint64_t trigger_count = 0;
    /// OTHERS / CONTINUED_4 / CONTINUED_12 words; carried but not interpreted.
    std::uint64_t auxiliary_word_count = 0;
    std::uint64_t unknown_word_count = 0;
    /// Events whose latched address falls outside the sensor array; never emitted.
    std::uint64_t out_of_bounds_count = 0;
    std::uint64_t wrap_count = 0;

    friend bool operator==(const DecodeStats&, const DecodeStats&) = default;
};

/// Latches carried between words. A value type: copying it forks the decoder.
struct DecoderState {
    std::uint16_t current_y = 0;
    std::uint16_t time_low = 0;  // 12 bits
    std::uint16_t time_high = 0; // 12 bits
    std::uint16_t vect_base_x = 0;
    std::uint8_t vect_polarity = 0;
    std::uint16_t width = sensor_width;
    std::uint16_t height = sensor_height;
    DecodeStats stats;

    [[nodiscard]] constexpr std::uint32_t current_time() const noexcept {
        return (static_cast<std::uint32_t>(time_high) << 12) | time_low;
    }
};

namespace detail {

template <typename Emit>
inline void emit_vector(DecoderState& s, std::uint32_t valid, unsigned span, Emit& emit) {
    // Walk only the set bits.
    const std::uint32_t t = s.current_time();
    while (valid != 0) {
        const unsigned bit = static_cast<unsigned>(std::countr_zero(valid));
        valid &= valid - 1;
        const unsigned x = s.vect_base_x + bit;
        if (x >= s.width || s.current_y >= s.height) {
            ++s.stats.out_of_bounds_count;
            continue;
        }
        ++s.stats.events_emitted;
        ++s.stats.vectorized_events;
        emit(Event{static_cast<std::uint16_t>(x), s.current_y, s.vect_polarity, t});
    }
    s.vect_base_x = static_cast<std::uint16_t>(s.vect_base_x + span);
}

} // namespace detail

/// Advance the decoder by one word, calling emit(Event) for each decoded event.
template <typename Emit>
inline void decode_word(DecoderState& s, EventWord word, Emit&& emit) {
    ++s.stats.words_consumed;
    const std::uint16_t payload = word.payload();
    switch (static_cast<WordType>(word.type_code())) {
    case WordType::addr_y:
        s.current_y = payload & coord_mask;
        break;
    case WordType::addr_x: {
        const std::uint16_t x = payload & coord_mask;
        if (x >= s.width || s.current_y >= s.height) {
            ++s.stats.out_of_bounds_count;
            break;
        }
        ++s.stats.events_emitted;
        ++s.stats.single_events;
        emit(Event{x, s.current_y, static_cast<std::uint8_t>((payload & polarity_bit) ? 1 : 0),
                   s.current_time()});
        break;
    }
    case WordType::vect_base_x:
        s.vect_base_x = payload & coord_mask;
        s.vect_polarity = (payload & polarity_bit) ? 1 : 0;
        break;
    case WordType::vect_12:
        detail::emit_vector(s, payload, 12, emit);
        break;
    case WordType::vect_8:
        detail::emit_vector(s, payload & 0xFFu, 8, emit);
        break;
    case WordType::time_low:
        s.time_low = payload;
        break;
    case WordType::time_high:
        if (payload < s.time_high) {
            ++s.stats.wrap_count;
        }
        s.time_high = payload;
        break;
    case WordType::ext_trigger:
        ++s.stats.trigger_count;
        break;
    case WordType::others:
    case WordType::continued_4:
    case WordType::continued_12:
        ++s.stats.auxiliary_word_count;
        break;
    default:
        ++s.stats.unknown_word_count;
        break;
    }
}

/// Convenience form returning the (at most 12) events produced by one word.
inline std::vector<Event> decode_word(DecoderState& s, EventWord word) {
    std::vector<Event> out;
    decode_word(s, word, [&](const Event& e) { out.push_back(e); });
    return out;
}

/// Incremental decoder over little-endian byte chunks. A chunk may end mid-word;
/// the dangling byte is carried into the next feed().
class Decoder {
public:
    Decoder() = default;
    Decoder(std::uint16_t width, std::uint16_t height) {
        state_.width = width;
        state_.height = height;
    }

    template <typename Emit>
    void feed(std::span<const std::uint8_t> bytes, Emit&& emit) {
        std::size_t i = 0;
        if (pending_ && !bytes.empty()) {
            const auto raw = static_cast<std::uint16_t>(*pending_ | (bytes[0] << 8));
            pending_.reset();
            decode_word(state_, EventWord{raw}, emit);
            i = 1;
        }
        for (; i + 1 < bytes.size(); i += 2) {
            const auto raw = static_cast<std::uint16_t>(bytes[i] | (bytes[i + 1] << 8));
            decode_word(state_, EventWord{raw}, emit);
        }
        if (i < bytes.size()) {
            pending_ = bytes[i];
        }
        bytes_seen_ += bytes.size();
    }

    void feed(std::span<const std::uint8_t> bytes, std::vector<Event>& out) {
        feed(bytes, [&](const Event& e) { out.push_back(e); });
    }

    /// Throws OddLengthError if a half word is still pending.
    void finish() const {
        if (pending_) {
            throw OddLengthError(bytes_seen_ - 1);
        }
    }

    [[nodiscard]] const DecoderState& state() const noexcept { return state_; }
    [[nodiscard]] const DecodeStats& stats() const noexcept { return state_.stats; }

private:
    DecoderState state_;
    std::optional<std::uint8_t> pending_;
    std::size_t bytes_seen_ = 0;
};

struct DecodeResult {
    std::vector<Event> events;
    DecodeStats stats;
};

inline DecodeResult decode_stream(std::span<const std::uint8_t> bytes, std::uint16_t width = sensor_width,
                                  std::uint16_t height = sensor_height) {
    if (bytes.size() % 2 != 0) {
        throw OddLengthError(bytes.size() - 1);
    }
    Decoder decoder(width, height);
    DecodeResult result;
    result.events.reserve(bytes.size() / 2);
    decoder.feed(bytes, result.events);
    result.stats = decoder.stats();
    return result;
}

// --- encoder ---------------------------------------------------------------

namespace detail {

class WordWriter {
public:
    explicit WordWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(EventWord w) {
        out_.push_back(static_cast<std::uint8_t>(w.raw & 0xFF));
        out_.push_back(static_cast<std::uint8_t>(w.raw >> 8));
    }

    void put(WordType type, std::uint16_t payload) { put(EventWord::make(type, payload)); }

private:
    std::vector<std::uint8_t>& out_;
};

} // namespace detail

/// Encode time-sorted events. Time and row words are emitted only when the
/// latched value changes (the decoder starts from all-zero latches). Runs of
/// consecutive events sharing (y, t, p) with strictly increasing x inside one
/// 32-pixel bank become VECT_BASE_X + VECT_12 + VECT_12 + VECT_8 when that is
/// shorter than single ADDR_X words; the vector words stop after the last
/// non-empty chunk.
inline std::vector<std::uint8_t> encode_events(std::span<const Event> events,
                                               std::uint16_t width = sensor_width,
                                               std::uint16_t height = sensor_height) {
    std::vector<std::uint8_t> out;
    out.reserve(events.size() * 2 + 64);
    detail::WordWriter w(out);

    std::uint16_t latched_low = 0;
    std::uint16_t latched_high = 0;
    std::uint16_t latched_y = 0;

    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.x >= width || e.y >= height || e.p > 1 || e.t >= timestamp_modulus) {
            throw EncodeError(EncodeError::Kind::coord_out_of_range, i);
        }
        if (i > 0 && e.t < events[i - 1].t) {
            throw EncodeError(EncodeError::Kind::unsorted_timestamps, i);
        }
    }

    std::size_t i = 0;
    while (i < events.size()) {
        const Event& first = events[i];
        const auto high = static_cast<std::uint16_t>(first.t >> 12);
        const auto low = static_cast<std::uint16_t>(first.t & 0x0FFF);
        if (high != latched_high) {
            w.put(WordType::time_high, high);
            latched_high = high;
        }
        if (low != latched_low) {
            w.put(WordType::time_low, low);
            latched_low = low;
        }
        if (first.y != latched_y) {
            w.put(WordType::addr_y, first.y);
            latched_y = first.y;
        }

        // Greedy run: same (y, t, p), same bank, strictly ascending x.
        const unsigned bank = first.x / bank_width;
        std::uint32_t mask = 1u << (first.x % bank_width);
        std::size_t j = i + 1;
        while (j < events.size()) {
            const Event& e = events[j];
            if (e.t != first.t || e.y != first.y || e.p != first.p || e.x / bank_width != bank ||
                e.x <= events[j - 1].x) {
                break;
            }
            mask |= 1u << (e.x % bank_width);
            ++j;
        }
        const std::size_t run = j - i;
        const unsigned top_bit = 31u - static_cast<unsigned>(std::countl_zero(mask));
        const std::size_t chunks = top_bit < 12 ? 1 : (top_bit < 24 ? 2 : 3);

        if (1 + chunks < run) {
            const auto base = static_cast<std::uint16_t>(bank * bank_width);
            w.put(WordType::vect_base_x, static_cast<std::uint16_t>(base | (first.p ? polarity_bit : 0)));
            w.put(WordType::vect_12, static_cast<std::uint16_t>(mask & 0x0FFF));
            if (chunks > 1) {
                w.put(WordType::vect_12, static_cast<std::uint16_t>((mask >> 12) & 0x0FFF));
            }
            if (chunks > 2) {
                w.put(WordType::vect_8, static_cast<std::uint16_t>((mask >> 24) & 0xFF));
            }
        } else {
            for (std::size_t k = i; k < j; ++k) {
                w.put(WordType::addr_x, static_cast<std::uint16_t>(events[k].x | (events[k].p ? polarity_bit : 0)));
            }
        }
        i = j;
    }
    return out;
}

} // namespace evf::evt3
