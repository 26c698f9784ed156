#include <gtest/gtest.h>

#include "sentinel/detection.hpp"
#include "sentinel/geometry.hpp"
#include "sentinel/world.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace sentinel;
using namespace sentinel::testing;

namespace {

const IntersectionSpec& intersection() {
    static const IntersectionSpec ix = sentinel::testing::scenario("intersection").intersection;
    return ix;
}

ConflictMatrix matrix() {
    const auto& ix = intersection();
    return buildConflictMatrix(mapOf(ix, {1}), centerlinesOf(ix), ix.signalGroups);
}

}  // namespace

TEST(Segments, AgreeWithOracleOnRandomCases) {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        // small integer grid makes touching and collinear cases common
        auto pt = [&] { return Vec2{std::floor(rng.uniform(-3, 3)), std::floor(rng.uniform(-3, 3))}; };
        const Vec2 a = pt(), b = pt(), c = pt(), d = pt();
        ASSERT_EQ(segmentsIntersect(a, b, c, d), oracleSegments(a, b, c, d))
            << a.x << "," << a.y << " " << b.x << "," << b.y << " " << c.x << "," << c.y << " " << d.x << "," << d.y;
    }
}

TEST(Segments, TouchingAndCollinear) {
    EXPECT_TRUE(segmentsIntersect({0, 0}, {1, 0}, {1, 0}, {2, 5}));
    EXPECT_TRUE(segmentsIntersect({0, 0}, {2, 0}, {1, 0}, {3, 0}));
    EXPECT_FALSE(segmentsIntersect({0, 0}, {1, 0}, {2, 0}, {3, 0}));
    EXPECT_FALSE(segmentsIntersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
}

TEST(ConflictMatrixTest, MatchesBruteForceOracle) {
    const auto cm = matrix();
    const auto oracle = oracleConflicts(intersection());
    for (auto a : intersection().signalGroups) {
        for (auto b : intersection().signalGroups) {
            if (a != b) {
                EXPECT_EQ(cm.conflicts(a, b), oracle.at({a, b})) << int(a) << " vs " << int(b);
            }
        }
    }
}

TEST(ConflictMatrixTest, ThroughMovements) {
    const auto cm = matrix();
    EXPECT_TRUE(cm.conflicts(1, 3));   // N-S through vs E-W through
    EXPECT_TRUE(cm.conflicts(5, 7));   // S-N through vs W-E through
    EXPECT_FALSE(cm.conflicts(1, 5));  // opposing throughs run parallel
    EXPECT_FALSE(cm.conflicts(3, 7));
}

TEST(ConflictMatrixTest, IsSymmetricAndIrreflexive) {
    const auto cm = matrix();
    for (auto a : cm.groups()) {
        EXPECT_FALSE(cm.conflicts(a, a));
        for (auto b : cm.groups()) {
            EXPECT_EQ(cm.conflicts(a, b), cm.conflicts(b, a));
        }
    }
}

TEST(ConflictMatrixTest, PhasesOfTheProgramAreConflictFree) {
    const auto cm = matrix();
    for (const auto& ph : intersection().phases) {
        for (auto a : ph.groups) {
            for (auto b : ph.groups) {
                EXPECT_FALSE(cm.conflicts(a, b));
            }
        }
    }
}

TEST(ConflictMatrixTest, UnknownGroupThrows) {
    const auto cm = matrix();
    EXPECT_THROW(cm.conflicts(1, 42), UnknownSignalGroup);
}

TEST(ConflictMatrixTest, DeclaredGroupWithoutLaneIsMalformed) {
    const auto& ix = intersection();
    const std::vector<std::uint8_t> groups{1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_THROW(buildConflictMatrix(mapOf(ix, {1}), centerlinesOf(ix), groups), MalformedTopology);
    auto lines = centerlinesOf(ix);
    lines.erase(lines.begin());
    EXPECT_THROW(buildConflictMatrix(mapOf(ix, {1}), lines), MalformedTopology);
}

// Every red/yellow/green assignment of the eight groups: the detector fires exactly when
// two conflicting groups are green according to the geometric oracle.
TEST(SpatOracle, AllAssignmentsOfEightGroups) {
    const auto cm = matrix();
    const auto oracle = oracleConflicts(intersection());
    const auto& groups = intersection().signalGroups;
    ASSERT_EQ(groups.size(), 8u);
    const SignalState states[] = {SignalState::red, SignalState::yellow, SignalState::green};
    int cases = 0;
    int firing = 0;
    for (int code = 0; code < 6561; ++code) {
        SpatPayload spat{{1}, {}, 0};
        int c = code;
        for (auto g : groups) {
            spat.phases.push_back({g, states[c % 3], 1000});
            c /= 3;
        }
        bool expected = false;
        for (const auto& a : spat.phases) {
            for (const auto& b : spat.phases) {
                expected = expected || (a.state == SignalState::green && b.state == SignalState::green &&
                                        oracle.at({a.signalGroup, b.signalGroup}));
            }
        }
        const auto r = checkSpatConflicts(spat, cm, nullptr, {}, 0);
        ASSERT_EQ(r.has_value(), expected) << "assignment " << code;
        if (r) {
            EXPECT_EQ(r->anomaly, Anomaly::conflictingGreens);
            ++firing;
        }
        ++cases;
    }
    EXPECT_EQ(cases, 6561);
    EXPECT_GT(firing, 0);
}

TEST(Chaikin, KeepsEndpointsAndSmooths) {
    const Polyline l{{0, 0}, {10, 0}, {10, 10}};
    const auto s = chaikin(l, 2);
    EXPECT_EQ(s.front(), l.front());
    EXPECT_EQ(s.back(), l.back());
    EXPECT_GT(s.size(), l.size());
    for (const auto& p : s) {
        EXPECT_FALSE(p.x > 10 - 1e-9 && p.y < 1e-9 && p.x != 10) << "corner should be cut";
    }
}

TEST(PathTest, ArcLength) {
    const Path p({{0, 0}, {3, 0}, {3, 4}});
    EXPECT_DOUBLE_EQ(p.length(), 7.0);
    EXPECT_EQ(p.pointAt(5.0), (Vec2{3, 2}));
    EXPECT_NEAR(p.headingAt(1.0), 0.0, 1e-12);
    EXPECT_NEAR(p.headingAt(6.0), std::numbers::pi / 2, 1e-12);
}

TEST(Kinematics, IntegrateStopsAtZeroSpeed) {
    const auto s = integrate({0, 0, 0, 2, -1}, 5.0);
    EXPECT_NEAR(s.x, 2.0, 1e-12);  // v^2 / 2a
    EXPECT_DOUBLE_EQ(s.speed, 0.0);
    const auto a = advance(2.0, -1.0, 5.0);
    EXPECT_NEAR(a.distance, 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(a.speed, 0.0);
    const auto b = advance(10.0, 1.0, 0.1);
    EXPECT_NEAR(b.distance, 1.005, 1e-12);
    EXPECT_NEAR(b.speed, 10.1, 1e-12);
}
