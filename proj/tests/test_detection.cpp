#include <gtest/gtest.h>

#include <numbers>

#include "sentinel/detection.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/geometry.hpp"
#include "sentinel/rng.hpp"
#include "support.hpp"

using namespace sentinel;

namespace {

constexpr double kPi = std::numbers::pi;
const Digest kDigest{};

KinematicState at(double x, double y, double heading, double speed, double accel = 0.0) {
    return {x, y, heading, speed, accel};
}

PerceivedObject object(std::uint16_t id, KinematicState s, ObjectClass cls = ObjectClass::vehicle) {
    PerceivedObject o;
    o.objectId = id;
    o.state = s;
    o.classification = cls;
    return o;
}

// Straight-line track along +x with constant acceleration, sampled every 100 ms.
Track straightTrack(std::uint32_t subject, TrackSource src, Vec2 start, double heading, double v0, double a,
                    std::uint64_t t0, int samples) {
    Track tr(subject, src);
    KinematicState s = at(start.x, start.y, heading, v0, a);
    for (int k = 0; k < samples; ++k) {
        tr.push(t0 + static_cast<std::uint64_t>(k) * 100, s);
        s = integrate(s, 0.1);
    }
    return tr;
}

}  // namespace

TEST(Plausibility, SpeedAndRegion) {
    const PlausibilityConfig cfg;
    EXPECT_FALSE(checkPlausibility(CamPayload{{10}, at(0, 0, 0, 30), 0}, cfg, kDigest, 0));
    const auto fast = checkPlausibility(CamPayload{{10}, at(0, 0, 0, 80), 0}, cfg, kDigest, 0);
    ASSERT_TRUE(fast);
    EXPECT_EQ(fast->anomaly, Anomaly::implausiblePayload);
    EXPECT_EQ(fast->offender, Offender::station({10}));
    EXPECT_TRUE(wellFormed(*fast));
    EXPECT_TRUE(checkPlausibility(CamPayload{{10}, at(0, 0, 0, 5, -12), 0}, cfg, kDigest, 0));
    EXPECT_TRUE(checkPlausibility(CamPayload{{10}, at(600, 0, 0, 5), 0}, cfg, kDigest, 0));
}

TEST(Plausibility, CpmObjects) {
    const PlausibilityConfig cfg;
    CpmPayload cpm{{20}, {0, 0, 0, 50, kPi}, {object(1, at(10, 0, 0, 1))}, 0};
    EXPECT_FALSE(checkPlausibility(cpm, cfg, kDigest, 0));
    cpm.objects.push_back(object(2, at(10, 5, 0, 90)));
    EXPECT_TRUE(checkPlausibility(cpm, cfg, kDigest, 0));
}

TEST(Consistency, GateFormula) {
    const ConsistencyConfig cfg;
    EXPECT_DOUBLE_EQ(consistencyGate(0.1, 10.0, cfg), 0.5 + 0.5 * 0.1 * 10.0 * 0.2);
    EXPECT_DOUBLE_EQ(consistencyGate(0.0, 30.0, cfg), 0.5);
}

TEST(Consistency, TeleportIsFlagged) {
    Track h(10, TrackSource::cam);
    h.push(1000, at(0, 0, 0, 10));
    const auto r = checkConsistency(h, CamPayload{{10}, at(100, 0, 0, 10), 1100}, {}, kDigest, 1100);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->anomaly, Anomaly::inconsistentStream);
    EXPECT_DOUBLE_EQ(r->score, 100.0);
}

TEST(Consistency, BackwardsTimeIsFlagged) {
    Track h(10, TrackSource::cam);
    h.push(1000, at(0, 0, 0, 10));
    EXPECT_TRUE(checkConsistency(h, CamPayload{{10}, at(1, 0, 0, 10), 900}, {}, kDigest, 1100));
}

TEST(Consistency, GentleStopIsNotFlagged) {
    const ConsistencyConfig cfg;
    Track h(10, TrackSource::cam);
    KinematicState s = at(-60, -2, 0, 12, -3);
    std::uint64_t t = 0;
    h.push(t, s);
    for (int k = 0; k < 80; ++k) {
        s = integrate(s, 0.1);
        t += 100;
        const CamPayload next{{10}, s, t};
        ASSERT_FALSE(checkConsistency(h, next, cfg, kDigest, t)) << "step " << k;
        h.push(t, s);
    }
    EXPECT_DOUBLE_EQ(s.speed, 0.0);
}

TEST(Consistency, EmptyHistoryNeverFlags) {
    EXPECT_FALSE(checkConsistency(Track{}, CamPayload{{10}, at(0, 0, 0, 10), 0}, {}, kDigest, 0));
}

TEST(CrossCheck, GhostReportedOnKthStep) {
    CrossChecker cc;
    const FieldOfView fov{0, 0, 0, 60, kPi};
    const std::vector<PerceivedObject> local;
    for (int k = 0; k < 5; ++k) {
        const CpmPayload cpm{{30}, fov, {object(7, at(10, 10, 0, 0))}, static_cast<std::uint64_t>(k) * 100};
        const auto out = cc.checkCpm(cpm, kDigest, local, fov, cpm.genTime);
        if (k == 2) {
            ASSERT_EQ(out.size(), 1u);
            EXPECT_EQ(out[0].anomaly, Anomaly::ghost);
            EXPECT_EQ(out[0].offender, Offender::station({30}));
            EXPECT_TRUE(wellFormed(out[0]));
        } else {
            EXPECT_TRUE(out.empty()) << k;
        }
    }
}

TEST(CrossCheck, OmissionReportedOnKthStep) {
    CrossChecker cc;
    const FieldOfView fov{0, 0, 0, 60, kPi};
    const std::vector<PerceivedObject> local{object(4, at(5, -5, 0, 8))};
    std::vector<std::size_t> counts;
    for (int k = 0; k < 4; ++k) {
        const CpmPayload cpm{{31}, fov, {}, static_cast<std::uint64_t>(k) * 100};
        counts.push_back(cc.checkCpm(cpm, kDigest, local, fov, cpm.genTime).size());
    }
    EXPECT_EQ(counts, (std::vector<std::size_t>{0, 0, 1, 0}));
}

TEST(CrossCheck, InterruptedRunStartsOver) {
    CrossChecker cc;
    const FieldOfView fov{0, 0, 0, 60, kPi};
    const std::vector<PerceivedObject> none;
    const std::vector<PerceivedObject> seen{object(1, at(10, 10, 0, 0))};
    int reports = 0;
    for (int k = 0; k < 8; ++k) {
        const CpmPayload cpm{{30}, fov, {object(7, at(10, 10, 0, 0))}, static_cast<std::uint64_t>(k) * 100};
        // confirmed every third step
        reports += static_cast<int>(cc.checkCpm(cpm, kDigest, k % 3 == 2 ? seen : none, fov, cpm.genTime).size());
    }
    EXPECT_EQ(reports, 0);
}

TEST(CrossCheck, ObjectsOutsideLocalViewAreNotGhosts) {
    const FieldOfView local{0, 0, 0, 20, kPi};
    const std::vector<Vec2> remote{{30, 0}, {19, 0}, {5, 0}};
    EXPECT_EQ(findGhosts(remote, {}, local, {}), (std::vector<std::size_t>{2}));
}

TEST(CrossCheck, UsurpationBlamesLaterIdentity) {
    CrossChecker cc;
    const FieldOfView fov{0, 0, 0, 60, kPi};
    const std::vector<PerceivedObject> local{object(1, at(0, 0, 0, 10))};
    const Advertised honest{{11}, at(0, 0, 0, 10), {}};
    std::vector<DetectionReport> all;
    for (int k = 0; k < 3; ++k) {
        std::vector<Advertised> adv{honest};
        auto out = cc.checkAdvertised(adv, local, fov, static_cast<std::uint64_t>(k) * 100);
        EXPECT_TRUE(out.empty());
    }
    for (int k = 3; k < 6; ++k) {
        std::vector<Advertised> adv{honest, {{12}, at(0.5, 0.2, 0, 10), {}}};
        auto out = cc.checkAdvertised(adv, local, fov, static_cast<std::uint64_t>(k) * 100);
        all.insert(all.end(), out.begin(), out.end());
    }
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].anomaly, Anomaly::positionUsurpation);
    EXPECT_EQ(all[0].offender, Offender::station({12}));
    EXPECT_EQ(all[0].evidence.size(), 2u);
}

TEST(CrossCheck, UnoccupiedDuplicateIsNotUsurpation) {
    const std::vector<Advertised> adv{{{11}, at(0, 0, 0, 10), {}}, {{12}, at(0.5, 0, 0, 10), {}}};
    EXPECT_TRUE(findUsurpations(adv, {}, {}).empty());
    const std::vector<PerceivedObject> local{object(1, at(0.2, 0, 0, 0))};
    EXPECT_EQ(findUsurpations(adv, local, {}).size(), 1u);
}

TEST(SpatConflicts, AllGreenFiresAndSafePairDoesNot) {
    const auto ix = sentinel::testing::scenario("intersection").intersection;
    const auto cm = buildConflictMatrix(mapOf(ix, {1}), centerlinesOf(ix), ix.signalGroups);
    SpatPayload all{{1}, {}, 0};
    for (auto g : ix.signalGroups) {
        all.phases.push_back({g, SignalState::green, 5000});
    }
    const auto r = checkSpatConflicts(all, cm, nullptr, kDigest, 0);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->anomaly, Anomaly::conflictingGreens);
    EXPECT_GT(r->score, 0.0);

    SpatPayload safe{{1}, {}, 0};
    for (auto g : ix.signalGroups) {
        safe.phases.push_back({g, (g == 1 || g == 5) ? SignalState::green : SignalState::red, 5000});
    }
    EXPECT_FALSE(checkSpatConflicts(safe, cm, nullptr, kDigest, 0));

    SpatPayload unknown{{1}, {{42, SignalState::green, 0}}, 0};
    EXPECT_THROW(checkSpatConflicts(unknown, cm, nullptr, kDigest, 0), UnknownSignalGroup);
}

TEST(SpatConflicts, EarlyGreenAgainstAnnouncedChange) {
    const auto ix = sentinel::testing::scenario("intersection").intersection;
    const auto cm = buildConflictMatrix(mapOf(ix, {1}), centerlinesOf(ix), ix.signalGroups);
    SpatHistory h;
    h.record({{1}, {{1, SignalState::red, 20000}}, 0});
    EXPECT_TRUE(checkSpatConflicts({{1}, {{1, SignalState::green, 0}}, 5000}, cm, &h, kDigest, 5000));
    EXPECT_FALSE(checkSpatConflicts({{1}, {{1, SignalState::green, 0}}, 19950}, cm, &h, kDigest, 19950));
}

TEST(CamPerception, StopLieDeviationAtLeastTen) {
    CamPerceptionMonitor mon;
    Track cam(40, TrackSource::cam);
    std::map<std::uint32_t, Track> perceived;
    perceived[3] = Track(3, TrackSource::cpm);
    std::optional<DetectionReport> fired;
    int firedAt = -1;
    for (int k = 0; k < 10; ++k) {
        const std::uint64_t t = static_cast<std::uint64_t>(k) * 100;
        const double x = -50 + 10 * 0.1 * k;
        perceived[3].push(t, at(x, -2, 0, 10));
        // the CAM claims the car is braking to a standstill at the stop line
        cam.push(t, at(x, -2, 0, std::max(0.0, 10.0 - 4.0 * k)));
        if (auto r = mon.observe({40}, cam, perceived, kDigest, t); r && !fired) {
            fired = r;
            firedAt = k;
        }
    }
    ASSERT_TRUE(fired);
    EXPECT_EQ(fired->anomaly, Anomaly::stopLie);
    EXPECT_GE(fired->score, 10.0);
    EXPECT_EQ(firedAt, 3);  // out of gate from k = 1 (6 vs 10 m/s), K = 3
    EXPECT_EQ(mon.associated({40}), std::optional<std::uint32_t>{3});
    EXPECT_TRUE(wellFormed(*fired));
}

TEST(CamPerception, HonestCamStaysQuiet) {
    CamPerceptionMonitor mon;
    Rng rng(5);
    Track cam(40, TrackSource::cam);
    std::map<std::uint32_t, Track> perceived;
    perceived[3] = Track(3, TrackSource::cpm);
    for (int k = 0; k < 200; ++k) {
        const std::uint64_t t = static_cast<std::uint64_t>(k) * 100;
        const double v = 12.0 - 0.05 * k;
        perceived[3].push(t, at(k * 0.1, 0, 0, v + rng.normal(0, 0.15)));
        cam.push(t, at(k * 0.1, 0, 0, v + rng.normal(0, 0.05)));
        ASSERT_FALSE(mon.observe({40}, cam, perceived, kDigest, t)) << k;
    }
}

TEST(Collision, OrthogonalClosestApproachOracle) {
    // pedestrian crossing north at 1.4 m/s, car heading east at 10 m/s, both reach the origin at 2 s
    const auto cpa = closestApproach({0, -2.8}, {0, 1.4}, {-20, 0}, {10, 0}, 4.0);
    EXPECT_NEAR(cpa.timeS, 2.0, 1e-12);
    EXPECT_NEAR(cpa.distance, 0.0, 1e-12);
    const auto same = closestApproach({0, -2.8}, {0, 1.4}, {-20, 0}, {1, 0}, 10.0, 0.0, 4.0);
    EXPECT_NEAR(same.timeS, 2.0, 1e-12);
    // braking at 5 m/s^2 stops the car 10 m short
    const auto braking = closestApproach({0, -2.8}, {0, 1.4}, {-20, 0}, {1, 0}, 10.0, -5.0, 4.0);
    EXPECT_GT(braking.distance, 2.0);
    // a horizon shorter than the meeting time
    EXPECT_NEAR(closestApproach({0, -2.8}, {0, 1.4}, {-20, 0}, {10, 0}, 1.0).timeS, 1.0, 1e-12);
}

TEST(Collision, CrossingVehiclePredicted) {
    const CollisionConfig cfg;
    const auto vru = straightTrack(1, TrackSource::uwb, {0, -2.8 - 1.4 * 1.5}, kPi / 2, 1.4, 0, 0, 16);
    const auto car = straightTrack(2, TrackSource::cpm, {-20 - 15, 0}, 0, 10, 0, 0, 16);
    const Track* threats[] = {&car};
    const auto hit = predictVruCollision(vru, threats, cfg);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->cpa.timeS, 2.0, 0.05);
}

TEST(Collision, StoppedVehicleIsNoThreat) {
    const CollisionConfig cfg;
    const auto vru = straightTrack(1, TrackSource::uwb, {0, -5}, kPi / 2, 1.4, 0, 0, 16);
    const auto car = straightTrack(2, TrackSource::cpm, {-3, 0}, 0, 0, 0, 0, 16);
    const Track* threats[] = {&car};
    EXPECT_FALSE(predictVruCollision(vru, threats, cfg));
}

TEST(Collision, ShortVruHistoryIsNotExtrapolated) {
    const CollisionConfig cfg;
    const auto vru = straightTrack(1, TrackSource::uwb, {0, -2.8}, kPi / 2, 1.4, 0, 1000, 5);
    const auto car = straightTrack(2, TrackSource::cpm, {-35, 0}, 0, 10, 0, 0, 16);
    const Track* threats[] = {&car};
    EXPECT_FALSE(predictVruCollision(vru, threats, cfg));
}

TEST(Collision, MonitorReportsRisingEdgeOnce) {
    CollisionMonitor mon;
    std::map<std::uint32_t, Track> vrus{{1, straightTrack(1, TrackSource::uwb, {0, -5}, kPi / 2, 1.4, 0, 0, 16)}};
    std::map<std::uint32_t, Track> threats{{2, straightTrack(2, TrackSource::cpm, {-35, 0}, 0, 10, 0, 0, 16)}};
    const auto first = mon.observe(vrus, threats, 1500);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].anomaly, Anomaly::imminentCollision);
    EXPECT_EQ(first[0].tracks.size(), 2u);
    EXPECT_TRUE(first[0].ttcS.has_value());
    EXPECT_TRUE(wellFormed(first[0]));
    EXPECT_TRUE(mon.observe(vrus, threats, 1600).empty());
}

TEST(SpeedFit, RecoversLinearProfile) {
    Track tr(1, TrackSource::cpm);
    for (int k = 0; k < 20; ++k) {
        tr.push(static_cast<std::uint64_t>(k) * 100, at(0, 0, 0, 12.0 - 2.0 * 0.1 * k));
    }
    const auto fit = fitSpeed(tr, 1.0);
    EXPECT_NEAR(fit.accel, -2.0, 1e-9);
    EXPECT_NEAR(fit.speed, 12.0 - 2.0 * 1.9, 1e-9);
    Track shortTrack(1, TrackSource::cpm);
    shortTrack.push(0, at(0, 0, 0, 3));
    EXPECT_DOUBLE_EQ(fitSpeed(shortTrack, 1.0).speed, 3.0);
    EXPECT_DOUBLE_EQ(fitSpeed(shortTrack, 1.0).accel, 0.0);
}

TEST(OnboardMonitorTest, RisingEdgeOnly) {
    OnboardMonitor m;
    EXPECT_FALSE(m.observe(false, {10}, 0));
    const auto r = m.observe(true, {10}, 100);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->anomaly, Anomaly::onboardCompromise);
    EXPECT_TRUE(wellFormed(*r));
    EXPECT_FALSE(m.observe(true, {10}, 200));
    EXPECT_FALSE(m.observe(false, {10}, 300));
    EXPECT_TRUE(m.observe(true, {10}, 400));
}

namespace {

struct VruRun {
    std::vector<DetectionReport> reports;
    int firstCpmReportStep = -1;
};

// A pedestrian walking at 1.4 m/s seen by the ego camera and by a remote CPM sender. From
// `lieFrom` on the CPM reports the pedestrian as standing still.
VruRun runVru(std::uint64_t seed, int lieFrom, int steps) {
    VruMonitor mon(GateConfig{}, {0.5, 0.15}, {0.5, 0.15});
    Rng rng(seed, 0x7A);
    VruRun out;
    const FieldOfView fov{0, 0, 0, 80, kPi};
    for (int k = 0; k < steps; ++k) {
        const std::uint64_t t = static_cast<std::uint64_t>(k) * 100;
        const double x = -9 + 1.4 * 0.1 * k;
        auto noisy = [&](double speed) {
            return object(5, at(x + rng.normal(0, 0.5), 12 + rng.normal(0, 0.5), 0, speed + rng.normal(0, 0.15)),
                          ObjectClass::pedestrian);
        };
        const std::vector<PerceivedObject> ego{noisy(1.4)};
        for (auto& r : mon.onOnboard(t, ego)) {
            out.reports.push_back(r);
        }
        const CpmPayload cpm{{31}, fov, {noisy(k >= lieFrom ? 0.0 : 1.4)}, t};
        for (auto& r : mon.onCpm(cpm, kDigest, t)) {
            if (r.source == TrackSource::cpm && out.firstCpmReportStep < 0) {
                out.firstCpmReportStep = k;
            }
            out.reports.push_back(r);
        }
    }
    return out;
}

}  // namespace

TEST(VruMonitorTest, FalseStationaryCpmFiresWithinTenUpdates) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto run = runVru(seed, 40, 60);
        ASSERT_GE(run.firstCpmReportStep, 40) << "seed " << seed;
        EXPECT_LT(run.firstCpmReportStep, 50) << "seed " << seed;
        for (const auto& r : run.reports) {
            EXPECT_TRUE(wellFormed(r));
            if (r.source == TrackSource::cpm) {
                EXPECT_EQ(r.offender, Offender::station({31}));
                EXPECT_EQ(r.detector, DetectorId::ekfGate);
            }
        }
    }
}

TEST(VruMonitorTest, LowConfidenceObjectsAreIgnored) {
    VruMonitor mon(GateConfig{}, {0.5, 0.15}, {0.5, 0.15});
    const FieldOfView fov{0, 0, 0, 80, kPi};
    for (int k = 0; k < 20; ++k) {
        auto o = object(5, at(k * 5.0, 0, 0, 0), ObjectClass::pedestrian);
        o.confidence = 0.5;
        const CpmPayload cpm{{31}, fov, {o}, static_cast<std::uint64_t>(k) * 100};
        EXPECT_TRUE(mon.onCpm(cpm, kDigest, cpm.genTime).empty());
    }
    EXPECT_TRUE(mon.nisLog(TrackSource::cpm, MeasurementKind::position).empty());
}

TEST(Reports, NamesRoundTrip) {
    for (auto d : kAllDetectors) {
        EXPECT_EQ(detectorFromString(toString(d)), d);
        for (auto a : anomaliesOf(d)) {
            EXPECT_EQ(anomalyFromString(toString(a)), a);
        }
    }
}

TEST(Reports, WellFormedNeedsEvidenceAndMatchingAnomaly) {
    DetectionReport r;
    r.detector = DetectorId::plausibility;
    r.anomaly = Anomaly::implausiblePayload;
    EXPECT_FALSE(wellFormed(r));
    r.evidence.push_back(kDigest);
    EXPECT_TRUE(wellFormed(r));
    r.anomaly = Anomaly::canDos;
    EXPECT_FALSE(wellFormed(r));
}

TEST(DetectionConfigTest, Validation) {
    DetectionConfig c;
    EXPECT_NO_THROW(validate(c));
    c.crossCheck.windowK = 0;
    EXPECT_THROW(validate(c), InvariantViolation);
}
