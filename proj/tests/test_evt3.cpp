#include "evframe/evt3.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace evf;
using namespace evf::evt3;

namespace {

std::vector<std::uint8_t> to_bytes(const std::vector<EventWord>& words) {
    std::vector<std::uint8_t> out;
    for (auto w : words) {
        out.push_back(static_cast<std::uint8_t>(w.raw & 0xFF));
        out.push_back(static_cast<std::uint8_t>(w.raw >> 8));
    }
    return out;
}

std::size_t count_type(const std::vector<std::uint8_t>& bytes, WordType type) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
        if ((bytes[i + 1] >> 4) == static_cast<unsigned>(type)) {
            ++n;
        }
    }
    return n;
}

} // namespace

TEST(EventWord, SplitsTypeAndPayload) {
    const EventWord w{0xA5C3};
    EXPECT_EQ(w.type_code(), 0xA);
    EXPECT_EQ(w.payload(), 0x5C3);
    EXPECT_EQ(EventWord::make(WordType::addr_x, 0x1FFF).raw, 0x2FFF);
}

TEST(Decode, EmptyInput) {
    const auto r = decode_stream({});
    EXPECT_TRUE(r.events.empty());
    EXPECT_EQ(r.stats, DecodeStats{});
}

TEST(Decode, FullBankFromVectorWords) {
    const std::uint32_t t = 0x123456;
    const auto bytes = to_bytes({EventWord::make(WordType::time_high, t >> 12),
                                 EventWord::make(WordType::time_low, t & 0xFFF),
                                 EventWord::make(WordType::addr_y, 5),
                                 EventWord::make(WordType::vect_base_x, 64 | polarity_bit),
                                 EventWord::make(WordType::vect_12, 0xFFF),
                                 EventWord::make(WordType::vect_12, 0xFFF),
                                 EventWord::make(WordType::vect_8, 0xFF)});
    const auto r = decode_stream(bytes);

    // Hand-unrolled expectation: one event per set bit, ascending columns.
    std::vector<Event> expected;
    for (int x = 64; x < 96; ++x) {
        expected.push_back(Event{static_cast<std::uint16_t>(x), 5, 1, t});
    }
    EXPECT_EQ(r.events, expected);
    EXPECT_EQ(r.stats.vectorized_events, 32u);
    EXPECT_EQ(r.stats.single_events, 0u);
    EXPECT_EQ(r.stats.words_consumed, 7u);
}

TEST(Decode, SparseVectorBitsMapToColumns) {
    DecoderState s;
    decode_word(s, EventWord::make(WordType::addr_y, 3));
    decode_word(s, EventWord::make(WordType::vect_base_x, 128));
    const auto a = decode_word(s, EventWord::make(WordType::vect_12, 0b100000000101));
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(a[0].x, 128);
    EXPECT_EQ(a[1].x, 130);
    EXPECT_EQ(a[2].x, 139);
    EXPECT_EQ(s.vect_base_x, 140);
    const auto b = decode_word(s, EventWord::make(WordType::vect_8, 0xF01)); // upper nibble ignored
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].x, 140);
    EXPECT_EQ(b[0].p, 0);
    EXPECT_EQ(s.vect_base_x, 148);
}

TEST(Decode, SingleXUsesLatches) {
    DecoderState s;
    decode_word(s, EventWord::make(WordType::time_high, 0x001));
    decode_word(s, EventWord::make(WordType::time_low, 0x002));
    decode_word(s, EventWord::make(WordType::addr_y, 10));
    const auto ev = decode_word(s, EventWord::make(WordType::addr_x, 700));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0], (Event{700, 10, 0, 0x1002}));
    EXPECT_EQ(s.stats.single_events, 1u);
}

TEST(Decode, UnknownWordIsSkipped) {
    std::vector<Event> events = {{1, 2, 1, 10}, {3, 4, 0, 20}};
    auto bytes = encode_events(events);
    std::vector<std::uint8_t> noisy(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2));
    // 0x1 is not assigned
    noisy.push_back(0x34);
    noisy.push_back(0x12);
    noisy.insert(noisy.end(), bytes.begin() + static_cast<std::ptrdiff_t>(bytes.size() / 2), bytes.end());
    const auto r = decode_stream(noisy);
    EXPECT_EQ(r.events, events);
    EXPECT_EQ(r.stats.unknown_word_count, 1u);
}

TEST(Decode, AuxiliaryWordsCounted) {
    DecoderState s;
    decode_word(s, EventWord{0xA001});
    decode_word(s, EventWord{0xE123});
    decode_word(s, EventWord{0x7001});
    decode_word(s, EventWord{0xF001});
    EXPECT_EQ(s.stats.trigger_count, 1u);
    EXPECT_EQ(s.stats.auxiliary_word_count, 3u);
    EXPECT_EQ(s.stats.events_emitted, 0u);
}

TEST(Decode, OddLengthReportsOffset) {
    const std::vector<std::uint8_t> bytes = {0x00, 0x60, 0x05};
    try {
        decode_stream(bytes);
        FAIL() << "expected OddLengthError";
    } catch (const OddLengthError& e) {
        EXPECT_EQ(e.offset(), 2u);
        EXPECT_EQ(e.error_class(), ErrorClass::format);
    }
}

TEST(Decode, TimeHighDecreaseCountsWrap) {
    DecoderState s;
    decode_word(s, EventWord::make(WordType::time_high, 0xFFF));
    decode_word(s, EventWord::make(WordType::time_high, 0x000));
    EXPECT_EQ(s.stats.wrap_count, 1u);
}

TEST(Decode, OutOfBoundsNeverEmitted) {
    DecoderState s;
    decode_word(s, EventWord::make(WordType::addr_y, 719));
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::addr_x, 1280)).size(), 0u);
    decode_word(s, EventWord::make(WordType::vect_base_x, 1248));
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::vect_12, 0xFFF)).size(), 12u);
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::vect_12, 0xFFF)).size(), 12u);
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::vect_8, 0xFF)).size(), 8u);
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::vect_8, 0xFF)).size(), 0u);
    decode_word(s, EventWord::make(WordType::addr_y, 720));
    EXPECT_EQ(decode_word(s, EventWord::make(WordType::addr_x, 0)).size(), 0u);
    EXPECT_EQ(s.stats.out_of_bounds_count, 10u);
    EXPECT_EQ(s.stats.events_emitted, s.stats.vectorized_events + s.stats.single_events);
}

TEST(Encode, FullBankIsEightBytes) {
    std::vector<Event> bank;
    for (std::uint16_t x = 32; x < 64; ++x) {
        bank.push_back(Event{x, 0, 1, 0});
    }
    const auto bytes = encode_events(bank);
    // Zero latches already match y = 0, t = 0; only the vector words remain.
    EXPECT_EQ(bytes.size(), 8u);
    EXPECT_EQ(count_type(bytes, WordType::vect_base_x), 1u);
    EXPECT_EQ(count_type(bytes, WordType::vect_12), 2u);
    EXPECT_EQ(count_type(bytes, WordType::vect_8), 1u);
    EXPECT_EQ(decode_stream(bytes).events, bank);

    bank.assign(bank.size(), Event{});
    for (std::uint16_t x = 0; x < 32; ++x) {
        bank[x] = Event{static_cast<std::uint16_t>(1248 + x), 719, 0, 0x345678};
    }
    const auto shifted = encode_events(bank);
    EXPECT_EQ(shifted.size(), 8u + 3 * 2); // + time high, time low, row
}

TEST(Encode, SingleEventUsesAddrX) {
    const std::vector<Event> one = {{17, 9, 1, 4097}};
    const auto bytes = encode_events(one);
    EXPECT_EQ(count_type(bytes, WordType::addr_x), 1u);
    EXPECT_EQ(count_type(bytes, WordType::vect_base_x), 0u);
    EXPECT_EQ(decode_stream(bytes).events, one);
}

TEST(Encode, TimeWordsOnlyOnChange) {
    const std::vector<Event> ev = {{1, 1, 0, 5}, {2, 1, 0, 5}, {3, 1, 0, 6}, {4, 1, 0, 4096 + 6}};
    const auto bytes = encode_events(ev);
    EXPECT_EQ(count_type(bytes, WordType::time_high), 1u);
    EXPECT_EQ(count_type(bytes, WordType::time_low), 2u);
    EXPECT_EQ(count_type(bytes, WordType::addr_y), 1u);
}

TEST(Encode, RejectsBadInput) {
    const std::vector<Event> oob = {{1280, 0, 0, 0}};
    try {
        encode_events(oob);
        FAIL();
    } catch (const EncodeError& e) {
        EXPECT_EQ(e.kind(), EncodeError::Kind::coord_out_of_range);
    }
    const std::vector<Event> unsorted = {{0, 0, 0, 10}, {0, 0, 0, 9}};
    try {
        encode_events(unsorted);
        FAIL();
    } catch (const EncodeError& e) {
        EXPECT_EQ(e.kind(), EncodeError::Kind::unsorted_timestamps);
        EXPECT_EQ(e.index(), 1u);
    }
}

TEST(Encode, CompactsSharedBanks) {
    const auto events = testutil::random_events(100000, 7, 0.3);
    const auto bytes = encode_events(events);
    EXPECT_LT(bytes.size(), 8 * events.size());
    EXPECT_EQ(decode_stream(bytes).events, events);
}

class RoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(RoundTrip, EncodeDecodeIsIdentity) {
    const int seed = GetParam();
    const double share = (seed % 4) * 0.25;
    const auto events = testutil::random_events(5000 + seed * 997, static_cast<std::uint64_t>(seed), share);
    const auto r = decode_stream(encode_events(events));
    EXPECT_EQ(r.events, events);
    EXPECT_EQ(r.stats.events_emitted, events.size());
    EXPECT_EQ(r.stats.unknown_word_count, 0u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RoundTrip, ::testing::Range(0, 16));

TEST(Decoder, ChunkedFeedEqualsWhole) {
    const auto events = testutil::random_events(20000, 11, 0.5);
    const auto bytes = encode_events(events);
    const auto whole = decode_stream(bytes);
    for (std::size_t chunk : {1u, 3u, 7u, 64u, 4095u}) {
        Decoder d;
        std::vector<Event> got;
        for (std::size_t i = 0; i < bytes.size(); i += chunk) {
            const std::size_t n = std::min(chunk, bytes.size() - i);
            d.feed(std::span<const std::uint8_t>(bytes).subspan(i, n), got);
        }
        d.finish();
        EXPECT_EQ(got, whole.events) << "chunk " << chunk;
        EXPECT_EQ(d.stats(), whole.stats) << "chunk " << chunk;
    }
}

TEST(Decoder, FinishThrowsOnDanglingByte) {
    Decoder d;
    std::vector<Event> out;
    const std::uint8_t b[] = {0x00, 0x60, 0x01};
    d.feed(b, out);
    EXPECT_THROW(d.finish(), OddLengthError);
}
