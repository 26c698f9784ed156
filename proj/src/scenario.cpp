#include "sentinel/scenario.hpp"

#include <array>
#include <cmath>
#include <set>
#include <string>

namespace sentinel {

namespace {

constexpr std::array<std::string_view, 6> kScenarioNames{"clean", "s1", "s2", "s3", "s4", "s5"};

[[noreturn]] void fail(const std::string& what) { throw InvariantViolation(what); }

}  // namespace

std::string_view toString(ScenarioKind kind) { return kScenarioNames.at(static_cast<std::size_t>(kind)); }

ScenarioKind scenarioFromString(std::string_view name) {
    for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
        if (kScenarioNames[i] == name) {
            return static_cast<ScenarioKind>(i);
        }
    }
    fail("unknown scenario '" + std::string(name) + "'");
}

std::string_view toString(CpmAttackMode mode) {
    switch (mode) {
        case CpmAttackMode::falseState: return "falseState";
        case CpmAttackMode::ghost: return "ghost";
        case CpmAttackMode::suppress: return "suppress";
    }
    return "?";
}

std::string_view toString(SpatAttackMode mode) {
    return mode == SpatAttackMode::allGreen ? "allGreen" : "conflictingPair";
}

std::string_view toString(OnboardAttackMode mode) {
    switch (mode) {
        case OnboardAttackMode::onboardCompromise: return "onboardCompromise";
        case OnboardAttackMode::dosFlood: return "dosFlood";
        case OnboardAttackMode::injection: return "injection";
        case OnboardAttackMode::dataModification: return "dataModification";
    }
    return "?";
}

void validate(const SimConfig& cfg) {
    if (cfg.stepMs != 100) {
        fail("step_ms must be 100");
    }
    if (cfg.durationMs == 0 || cfg.durationMs % cfg.stepMs != 0) {
        fail("duration_ms must be a positive multiple of step_ms");
    }
    if (!(cfg.lossProbability >= 0.0 && cfg.lossProbability < 1.0)) {
        fail("loss_probability must lie in [0, 1)");
    }
    if (cfg.cpmEverySteps == 0 || cfg.spatEverySteps == 0 || cfg.denmRepeatSteps == 0) {
        fail("message periods must be positive");
    }
}

std::vector<DetectorId> designatedDetectors(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::clean: return {};
        case ScenarioKind::s1: return {DetectorId::ekfGate, DetectorId::crossCheck};
        case ScenarioKind::s2: return {DetectorId::camPerceptionDeviation, DetectorId::crossCheck};
        case ScenarioKind::s3: return {DetectorId::spatConflict};
        case ScenarioKind::s4: return {DetectorId::vruCollision, DetectorId::camPerceptionDeviation};
        case ScenarioKind::s5: return {DetectorId::canTiming, DetectorId::onboardMonitor};
    }
    return {};
}

MapPayload mapOf(const IntersectionSpec& spec, StationId sender) {
    MapPayload map;
    map.sender = sender;
    for (const auto& lane : spec.lanes) {
        map.lanes.push_back({lane.id, lane.ingress, lane.egress, lane.signalGroup});
    }
    return map;
}

std::map<std::uint16_t, Polyline> centerlinesOf(const IntersectionSpec& spec) {
    std::map<std::uint16_t, Polyline> out;
    for (const auto& lane : spec.lanes) {
        out[lane.id] = lane.centerline;
    }
    return out;
}

void validate(const Fixture& f) {
    validate(f.sim);
    validate(f.detection);
    validate(f.can);
    f.policy.validateTotal();

    const auto& ix = f.intersection;
    if (ix.lanes.empty()) {
        fail("intersection has no lanes");
    }
    std::set<std::uint8_t> declared(ix.signalGroups.begin(), ix.signalGroups.end());
    std::set<std::uint16_t> laneIds;
    for (const auto& lane : ix.lanes) {
        if (!laneIds.insert(lane.id).second) {
            fail("duplicate lane id " + std::to_string(lane.id));
        }
        if (lane.centerline.size() < 2) {
            fail("lane " + std::to_string(lane.id) + " needs at least two centerline points");
        }
        if (!declared.count(lane.signalGroup)) {
            fail("lane " + std::to_string(lane.id) + " uses undeclared signal group " +
                 std::to_string(lane.signalGroup));
        }
    }
    std::set<std::uint8_t> phased;
    for (const auto& ph : ix.phases) {
        if (ph.greenMs == 0) {
            fail("phase green time must be positive");
        }
        for (auto g : ph.groups) {
            if (!declared.count(g)) {
                fail("phase uses undeclared signal group " + std::to_string(g));
            }
            if (!phased.insert(g).second) {
                fail("signal group " + std::to_string(g) + " appears in more than one phase");
            }
        }
    }
    if (ix.phases.empty()) {
        fail("signal program has no phases");
    }
    if (!(f.light.honorProbability >= 0.0 && f.light.honorProbability <= 1.0)) {
        fail("honor_probability must lie in [0, 1]");
    }
    if (!(f.camera.detectionProbability >= 0.0 && f.camera.detectionProbability <= 1.0)) {
        fail("camera detection_probability must lie in [0, 1]");
    }
    if (!(f.rsu.uwbProcessNoise > 0.0)) {
        fail("rsu uwb_process_noise must be positive");
    }
    if (f.camera.sigmaPos < 0 || f.camera.sigmaVel < 0 || f.rsu.uwbSigma < 0) {
        fail("noise sigmas must be non-negative");
    }

    std::set<std::string> names;
    std::set<std::uint32_t> stations{f.light.station, f.rsu.station};
    if (f.light.station != 0 && f.light.station == f.rsu.station) {
        fail("light and rsu share a station id");
    }
    for (const auto& a : f.actors) {
        if (a.name.empty() || !names.insert(a.name).second) {
            fail("actor names must be unique and non-empty ('" + a.name + "')");
        }
        if (a.station != 0 && !stations.insert(a.station).second) {
            fail("station id " + std::to_string(a.station) + " used twice");
        }
        if (a.kind == ActorKind::vehicle) {
            if (!laneIds.count(a.vehicle.lane)) {
                fail("actor '" + a.name + "' references unknown lane " + std::to_string(a.vehicle.lane));
            }
            if (a.vehicle.speed < 0 || a.vehicle.targetSpeed < 0 || a.vehicle.targetSpeed > 40) {
                fail("actor '" + a.name + "' speed out of range");
            }
            if (a.vehicle.startDistance > ix.approachLength) {
                fail("actor '" + a.name + "' starts beyond the lane approach");
            }
        } else {
            if (a.vru.waypoints.size() < 2) {
                fail("actor '" + a.name + "' needs at least two waypoints");
            }
            if (!(a.vru.speed > 0.0 && a.vru.speed <= 3.0)) {
                fail("actor '" + a.name + "' walking speed must lie in (0, 3]");
            }
        }
    }

    const auto& at = f.attack;
    auto requireActor = [&](const std::string& name, ActorKind kind, const char* field) {
        for (const auto& a : f.actors) {
            if (a.name == name) {
                if (a.kind != kind) {
                    fail(std::string("attack.") + field + " '" + name + "' has the wrong actor kind");
                }
                return;
            }
        }
        fail(std::string("attack.") + field + " names unknown actor '" + name + "'");
    };
    if (at.onsetMs >= f.sim.durationMs) {
        fail("attack onset lies beyond the run duration");
    }
    switch (f.sim.scenario) {
        case ScenarioKind::clean: break;
        case ScenarioKind::s1:
            if (at.cpmMode == CpmAttackMode::ghost) {
                requireActor(at.victim, ActorKind::vehicle, "victim");
            } else {
                bool found = false;
                for (const auto& a : f.actors) {
                    found = found || a.name == at.target;
                }
                if (!found) {
                    fail("attack.target names unknown actor '" + at.target + "'");
                }
            }
            break;
        case ScenarioKind::s2:
        case ScenarioKind::s4:
            requireActor(at.hackedVehicle, ActorKind::vehicle, "hacked_vehicle");
            break;
        case ScenarioKind::s3:
            if (at.spatMode == SpatAttackMode::conflictingPair &&
                (!declared.count(at.pairA) || !declared.count(at.pairB))) {
                fail("attack.pair uses undeclared signal groups");
            }
            break;
        case ScenarioKind::s5:
            requireActor(at.compromisedVehicle, ActorKind::vehicle, "compromised_vehicle");
            if (at.rateMultiplier && !(*at.rateMultiplier > 0.0)) {
                fail("attack.rate_multiplier must be positive");
            }
            break;
    }
}

}  // namespace sentinel
