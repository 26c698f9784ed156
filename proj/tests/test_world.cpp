#include <gtest/gtest.h>

#include <set>

#include "sentinel/trust.hpp"
#include "sentinel/world.hpp"
#include "support.hpp"

using namespace sentinel;

namespace {

EnvelopePtr envelope(std::uint32_t sender, std::uint64_t genTime) {
    static const auto keys = KeyPair::derive(1, "bus-test");
    static const CertificateAuthority ca(keys);
    static const Hsm hsm(keys, ca.issue({sender}, keys.publicKey(), PermissionSet::all()));
    return makeEnvelope(hsm.sign(encode(CamPayload{{sender}, {}, genTime})), MessageType::cam, {sender}, genTime);
}

const IntersectionSpec& intersection() {
    static const IntersectionSpec ix = sentinel::testing::scenario("intersection").intersection;
    return ix;
}

}  // namespace

TEST(BusTest, LossIsBinomial) {
    Bus bus(5, 0.3, 0);
    const auto tx = bus.attach({1}, {MessageType::cam});
    bus.attach({2}, {MessageType::cam});
    std::size_t delivered = 0;
    const auto msg = envelope(1, 0);
    for (std::uint64_t k = 0; k < 10000; ++k) {
        delivered += bus.broadcast(k, tx, msg).queued.size();
    }
    const double sigma = std::sqrt(10000 * 0.7 * 0.3);
    EXPECT_NEAR(static_cast<double>(delivered), 7000.0, 3 * sigma);
}

TEST(BusTest, DeliversAfterLatencyAndNeverToSender) {
    Bus bus(1, 0.0, 2);
    const auto a = bus.attach({1}, {MessageType::cam});
    const auto b = bus.attach({2}, {MessageType::cam});
    const auto c = bus.attach({3}, {MessageType::spat});
    const auto out = bus.broadcast(4, a, envelope(1, 400));
    EXPECT_EQ(out.queued, std::vector<std::size_t>{b});
    EXPECT_TRUE(bus.deliver(5)[b].empty());
    EXPECT_TRUE(bus.deliver(6)[b].empty());
    const auto inbox = bus.deliver(7);
    EXPECT_EQ(inbox[b].size(), 1u);
    EXPECT_TRUE(inbox[a].empty());
    EXPECT_TRUE(inbox[c].empty());
    EXPECT_EQ(bus.pending(), 0u);
}

TEST(BusTest, InboxOrderIsCanonical) {
    Bus bus(1, 0.0, 0);
    const auto r = bus.attach({9}, {MessageType::cam});
    const auto s1 = bus.attach({5}, {MessageType::cam});
    const auto s2 = bus.attach({3}, {MessageType::cam});
    bus.broadcast(0, s1, envelope(5, 20));
    bus.broadcast(0, s2, envelope(3, 30));
    bus.broadcast(0, s2, envelope(3, 10));
    const auto inbox = bus.deliver(1)[r];
    ASSERT_EQ(inbox.size(), 3u);
    EXPECT_EQ(inbox[0]->sender.value, 3u);
    EXPECT_EQ(inbox[0]->genTime, 10u);
    EXPECT_EQ(inbox[1]->genTime, 30u);
    EXPECT_EQ(inbox[2]->sender.value, 5u);
}

TEST(SignalProgramTest, FixtureTimeline) {
    const SignalProgram prog(intersection());
    EXPECT_EQ(prog.cycleMs(), 60000u);
    // E-W through green 2-12 s, yellow 12-15 s, N-S red for the first 30 s
    EXPECT_EQ(prog.phaseOf(3, 1000).state, SignalState::red);
    EXPECT_EQ(prog.phaseOf(3, 2000).state, SignalState::green);
    EXPECT_EQ(prog.phaseOf(7, 11900).state, SignalState::green);
    EXPECT_EQ(prog.phaseOf(7, 12000).state, SignalState::yellow);
    EXPECT_EQ(prog.phaseOf(7, 15000).state, SignalState::red);
    EXPECT_EQ(prog.phaseOf(8, 17000).state, SignalState::green);
    for (std::uint64_t t = 0; t < 30000; t += 100) {
        ASSERT_EQ(prog.phaseOf(1, t).state, SignalState::red) << t;
        ASSERT_EQ(prog.phaseOf(5, t).state, SignalState::red) << t;
    }
    EXPECT_EQ(prog.phaseOf(3, 2000).timeToChangeMs, 10000u);
    EXPECT_EQ(prog.phaseOf(3, 1000).timeToChangeMs, 1000u);
}

TEST(SignalProgramTest, NormalCycleNeverConflicts) {
    const auto& ix = intersection();
    const SignalProgram prog(ix);
    const auto cm = buildConflictMatrix(mapOf(ix, {1}), centerlinesOf(ix), ix.signalGroups);
    SpatHistory history;
    for (std::uint64_t t = 0; t < 2 * prog.cycleMs(); t += 100) {
        SpatPayload spat{{1}, prog.phasesAt(t), t};
        ASSERT_FALSE(checkSpatConflicts(spat, cm, &history, {}, t).has_value()) << t;
        history.record(spat);
    }
}

TEST(TrafficLightTest, OverrideHonoredUnlessHacked) {
    Rng rng(1);
    TrafficLight honest(intersection(), {0, 0.0});
    honest.request({OverrideTarget::redYellowBlinking, 1, {2}, 0});
    const auto r1 = honest.resolve(rng);
    ASSERT_EQ(r1.size(), 1u);
    EXPECT_EQ(r1[0].outcome, Outcome::delivered);
    EXPECT_EQ(honest.physical(3, 5000).state, SignalState::redYellowBlinking);

    TrafficLight hacked(intersection(), {0, 0.0});
    hacked.setHacked(true);
    hacked.request({OverrideTarget::redYellowBlinking, 1, {2}, 0});
    EXPECT_EQ(hacked.resolve(rng)[0].outcome, Outcome::ignored);
    EXPECT_EQ(hacked.physical(3, 5000).state, SignalState::green);
}

TEST(Uwb, SampleSigmaWithinChiSquareBound) {
    Rng rng(77);
    double sum = 0, sumSq = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto fix = uwbLocate({0, 0}, 1, {10, 5}, 0.3, rng);
        sum += fix.x - 10;
        sumSq += (fix.x - 10) * (fix.x - 10);
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sumSq / n - mean * mean);
    EXPECT_GE(sd, 0.27);
    EXPECT_LE(sd, 0.33);
}

TEST(Uwb, OutOfRangeThrows) {
    Rng rng(1);
    EXPECT_THROW(uwbLocate({0, 0}, 1, {150, 0}, 0.3, rng), OutOfRange);
    EXPECT_NO_THROW(uwbLocate({0, 0}, 1, {99, 0}, 0.3, rng));
}

TEST(Camera, CoastedObjectsLoseConfidence) {
    CameraSpec spec;
    spec.detectionProbability = 0.5;
    spec.coastSteps = 3;
    CameraSensor cam(spec, 3);
    PhysicalActor a;
    a.present = true;
    a.state = {10, 0, 0, 5, 0};
    a.classification = ObjectClass::pedestrian;
    std::vector<PhysicalActor> actors{a};
    const GateConfig gate;
    std::set<double> coastedLevels;
    for (int k = 0; k < 500; ++k) {
        for (const auto& obs : cam.capture(actors, 0.1)) {
            if (obs.measured) {
                EXPECT_DOUBLE_EQ(obs.object.confidence, 0.9);
                EXPECT_GE(obs.object.confidence, gate.minConfidence);
            } else {
                EXPECT_LT(obs.object.confidence, gate.minConfidence);
                coastedLevels.insert(obs.object.confidence);
            }
        }
    }
    // 0.9 * (3 + 1 - n) / 4 for n = 1..3
    EXPECT_EQ(coastedLevels, (std::set<double>{0.9 * 1 / 4, 0.9 * 2 / 4, 0.9 * 3 / 4}));
}

TEST(Camera, MissesEverythingAtZeroDetectionProbability) {
    CameraSpec spec;
    spec.detectionProbability = 0.0;
    CameraSensor cam(spec, 1);
    PhysicalActor a;
    a.present = true;
    std::vector<PhysicalActor> actors{a};
    EXPECT_TRUE(cam.capture(actors, 0.1).empty());
}

TEST(SenseObjects, ExcludesSelfAndOutOfView) {
    Rng rng(1);
    std::vector<PhysicalActor> actors(3);
    for (std::size_t i = 0; i < 3; ++i) {
        actors[i].index = i;
        actors[i].present = true;
    }
    actors[0].state = {0, 0, 0, 0, 0};
    actors[1].state = {20, 0, 0, 0, 0};
    actors[2].state = {-20, 0, 0, 0, 0};
    const auto seen = senseObjects(actors, {0, 0, 0, 60, 0.5}, 0.1, 0.1, rng, 0);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].objectId, 2);
}
