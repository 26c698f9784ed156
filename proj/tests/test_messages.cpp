#include <gtest/gtest.h>

#include <cstring>
#include <numbers>
#include <set>

#include "sentinel/messages.hpp"
#include "support.hpp"

using namespace sentinel;
using sentinel::testing::PayloadGen;

namespace {

// Field widths written out by hand from the layout rule: tag u8, StationId u32,
// five binary64 state fields, genTime u64.
constexpr std::size_t kTag = 1;
constexpr std::size_t kStation = 4;
constexpr std::size_t kReal = 8;
constexpr std::size_t kTime = 8;
constexpr std::size_t kCamBytes = kTag + kStation + 5 * kReal + kTime;
constexpr std::size_t kCamSpeedOffset = kTag + kStation + 3 * kReal;
constexpr std::size_t kCamGenTimeOffset = kTag + kStation + 5 * kReal;

}  // namespace

TEST(Codec, CamLengthMatchesLayout) {
    const auto bytes = encode(CamPayload{{1}, {0, 0, 0, 0, 0}, 0});
    EXPECT_EQ(bytes.size(), kCamBytes);
    EXPECT_EQ(bytes.size(), 53u);
    EXPECT_EQ(bytes.front(), 0x01);
}

TEST(Codec, EmptyInputIsMalformed) {
    EXPECT_THROW(decode({}), MalformedMessage);
    EXPECT_THROW(peekType({}), MalformedMessage);
}

TEST(Codec, UnknownTagIsMalformed) {
    auto bytes = encode(CamPayload{{1}, {}, 0});
    bytes[0] = 0x7E;
    EXPECT_THROW(decode(bytes), MalformedMessage);
}

TEST(Codec, TrailingBytesAreMalformed) {
    auto bytes = encode(SpatPayload{{3}, {{1, SignalState::green, 500}}, 9});
    bytes.push_back(0);
    EXPECT_THROW(decode(bytes), MalformedMessage);
}

TEST(Codec, PatchedSpeedViolatesInvariant) {
    auto bytes = encode(CamPayload{{1}, {10, 20, 1, 5, 0}, 100});
    const double bad = 200.0;
    std::uint64_t raw = 0;
    std::memcpy(&raw, &bad, 8);
    for (std::size_t i = 0; i < 8; ++i) {
        bytes[kCamSpeedOffset + i] = static_cast<std::uint8_t>(raw >> (8 * i));
    }
    EXPECT_THROW(decode(bytes), InvariantViolation);
}

TEST(Codec, GenTimeChangeIsLocal) {
    const auto a = encode(CamPayload{{7}, {1, 2, 3, 4, 0.5}, 1000});
    const auto b = encode(CamPayload{{7}, {1, 2, 3, 4, 0.5}, 0x0102030405060708ULL});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool inField = i >= kCamGenTimeOffset && i < kCamGenTimeOffset + kTime;
        if (!inField) {
            EXPECT_EQ(a[i], b[i]) << "byte " << i;
        }
    }
    EXPECT_NE(a, b);
}

TEST(Codec, EncodeRejectsInvalidPayload) {
    EXPECT_THROW(encode(CamPayload{{0}, {}, 0}), InvariantViolation);
    EXPECT_THROW(encode(CamPayload{{1}, {0, 0, 7.0, 0, 0}, 0}), InvariantViolation);
    EXPECT_THROW(encode(SpatPayload{{1}, {{2, SignalState::red, 0}, {2, SignalState::green, 0}}, 0}),
                 InvariantViolation);
    CpmPayload cpm{{1}, {0, 0, 0, 10, 0.5}, {}, 0};
    PerceivedObject far;
    far.state.x = 50;
    cpm.objects.push_back(far);
    EXPECT_THROW(encode(cpm), InvariantViolation);
}

TEST(Codec, RoundTripRandomPayloadsPerType) {
    PayloadGen gen(0xC0DEC);
    for (int i = 0; i < 10000; ++i) {
        const Payload ps[] = {gen.cam(), gen.cpm(), gen.denm(), gen.spat(), gen.map()};
        for (const auto& p : ps) {
            const auto bytes = encode(p);
            ASSERT_EQ(decode(bytes), p);
            ASSERT_EQ(peekType(bytes), typeOf(p));
        }
    }
}

TEST(Codec, EveryTruncationIsRejected) {
    PayloadGen gen(0x7A5C);
    for (int i = 0; i < 200; ++i) {
        const auto bytes = encode(gen.any());
        for (std::size_t n = 0; n < bytes.size(); ++n) {
            ASSERT_THROW(decode(ByteView(bytes.data(), n)), MalformedMessage) << "prefix " << n;
        }
    }
}

TEST(Codec, DistinctPayloadsEncodeDistinctly) {
    PayloadGen gen(99);
    std::set<Bytes> seen;
    for (int i = 0; i < 2000; ++i) {
        ASSERT_TRUE(seen.insert(encode(gen.any())).second);
    }
}

TEST(Headings, NormalizeAndDiff) {
    EXPECT_DOUBLE_EQ(normalizeHeading(-0.5), 2 * std::numbers::pi - 0.5);
    EXPECT_DOUBLE_EQ(normalizeHeading(0.0), 0.0);
    EXPECT_LT(normalizeHeading(2 * std::numbers::pi), 2 * std::numbers::pi);
    EXPECT_NEAR(angleDiff(0.1, 2 * std::numbers::pi - 0.1), 0.2, 1e-12);
    EXPECT_NEAR(angleDiff(std::numbers::pi, 0.0), std::numbers::pi, 1e-12);
}

TEST(FieldOfViewTest, SectorAndMargin) {
    const FieldOfView fov{0, 0, 0, 10, 0.5};
    EXPECT_TRUE(fov.contains(5, 0));
    EXPECT_FALSE(fov.contains(0, 5));
    EXPECT_FALSE(fov.contains(11, 0));
    EXPECT_TRUE(fov.contains(11, 0, 2.0));
    EXPECT_FALSE(fov.contains(9.5, 0, -1.0));
    const FieldOfView omni{0, 0, 0, 10, std::numbers::pi};
    EXPECT_TRUE(omni.contains(-9, 0));
}
