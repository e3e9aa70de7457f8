#include "evframe/frame_file.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace evf;

namespace {

Frame sample(std::uint32_t index) {
    Frame f;
    f.index = index;
    f.width = 4;
    f.height = 3;
    f.channels = 2;
    f.kind = Representation::slts;
    f.mode = AccumulationMode::constant_time;
    f.t_start = 0x010203;
    f.t_end = 0xFFFFFF;
    f.event_count = 99;
    for (std::size_t i = 0; i < 24; ++i) f.data.push_back(static_cast<std::uint8_t>(i * 7 + index));
    return f;
}

} // namespace

TEST(Evf1, HeaderLayout) {
    const auto h = evf1::encode_header(sample(0x0A0B0C0D));
    ASSERT_EQ(h.size(), 29u);
    EXPECT_EQ(std::string(h.begin(), h.begin() + 4), "EVF1");
    EXPECT_EQ(h[4], 1);
    EXPECT_EQ(h[5], 4);
    EXPECT_EQ(h[6], 0);
    EXPECT_EQ(h[7], 3);
    EXPECT_EQ(h[9], 2);
    EXPECT_EQ(h[10], 0);
    EXPECT_EQ(h[11], 3);
    EXPECT_EQ(h[12], 1);
    EXPECT_EQ(h[13], 0x0D);
    EXPECT_EQ(h[16], 0x0A);
    EXPECT_EQ(h[17], 0x03);
    EXPECT_EQ(h[19], 0x01);
    EXPECT_EQ(h[25], 99);
}

TEST(Evf1, RoundTripConcatenated) {
    std::stringstream ss;
    for (std::uint32_t i = 0; i < 3; ++i) evf1::write_frame(ss, sample(i));
    EXPECT_EQ(ss.str().size(), 3u * (29 + 24));
    const auto frames = evf1::read_frames(ss);
    ASSERT_EQ(frames.size(), 3u);
    for (std::uint32_t i = 0; i < 3; ++i) {
        const auto want = sample(i);
        EXPECT_EQ(frames[i].data, want.data);
        EXPECT_EQ(frames[i].index, i);
        EXPECT_EQ(frames[i].t_end, want.t_end);
        EXPECT_EQ(frames[i].kind, want.kind);
        EXPECT_EQ(frames[i].mode, want.mode);
    }
}

TEST(Evf1, RejectsDamage) {
    std::stringstream ss;
    evf1::write_frame(ss, sample(0));
    const std::string good = ss.str();

    std::stringstream truncated(good.substr(0, good.size() - 1));
    EXPECT_THROW(evf1::read_frames(truncated), FormatError);
    std::stringstream short_header(good.substr(0, 10));
    EXPECT_THROW(evf1::read_frames(short_header), FormatError);
    std::string bad = good;
    bad[0] = 'X';
    std::stringstream bad_magic(bad);
    EXPECT_THROW(evf1::read_frames(bad_magic), FormatError);
    std::stringstream empty;
    EXPECT_TRUE(evf1::read_frames(empty).empty());
}
