#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/canbus.hpp"
#include "sentinel/detection.hpp"
#include "sentinel/geometry.hpp"
#include "sentinel/mitigation.hpp"

namespace sentinel {

enum class ScenarioKind : std::uint8_t { clean, s1, s2, s3, s4, s5 };

std::string_view toString(ScenarioKind kind);
ScenarioKind scenarioFromString(std::string_view name);

struct SimConfig {
    std::uint32_t stepMs = 100;
    std::uint64_t durationMs = 20000;
    std::uint64_t seed = 1;
    double lossProbability = 0.01;
    std::uint32_t latencySteps = 0;
    ScenarioKind scenario = ScenarioKind::clean;
    std::uint32_t cpmEverySteps = 1;
    std::uint32_t spatEverySteps = 10;
    std::uint32_t denmRepeatSteps = 5;
    std::uint64_t denmLifetimeMs = 3000;

    std::uint64_t steps() const { return durationMs / stepMs; }
};

void validate(const SimConfig& cfg);

struct LaneSpec {
    std::uint16_t id = 0;
    Approach ingress = Approach::N;
    Approach egress = Approach::S;
    std::uint8_t signalGroup = 0;
    Polyline centerline;  // stop line first, exit last
};

struct PhaseSpec {
    std::vector<std::uint8_t> groups;
    std::uint32_t greenMs = 10000;
    std::uint32_t yellowMs = 3000;
    std::uint32_t allRedMs = 2000;
};

struct IntersectionSpec {
    std::vector<LaneSpec> lanes;
    std::vector<std::uint8_t> signalGroups;
    std::vector<PhaseSpec> phases;
    std::uint32_t offsetMs = 0;
    double stopBuffer = 1.0;      // vehicles halt this far before the stop line
    double approachLength = 200;  // straight lead-in before the stop line
    double exitLength = 100;
};

struct LightSpec {
    std::uint32_t station = 0;  // 0: assigned automatically
    double honorProbability = 0.0;
};

struct CameraSpec {
    FieldOfView fov{0.0, 0.0, 0.0, 120.0, std::numbers::pi};
    double sigmaPos = 0.5;
    double sigmaVel = 0.15;
    double detectionProbability = 0.98;
    int coastSteps = 3;
};

struct RsuSpec {
    std::uint32_t station = 0;
    Vec2 anchor{0.0, 0.0};
    double uwbSigma = 0.3;
    double uwbRange = 100.0;
    double uwbProcessNoise = 0.05;  // walking targets change velocity slowly; m^2/s^3
};

struct OnboardSensorSpec {
    bool enabled = true;
    double range = 60.0;
    double halfAngle = 0.5;
    double sigmaPos = 0.2;
    double sigmaVel = 0.2;
};

enum class ActorKind : std::uint8_t { vehicle, vru };

struct VehicleSpec {
    std::uint16_t lane = 0;
    double startDistance = 50.0;  // metres before the stop line at spawn
    double speed = 10.0;
    double targetSpeed = 10.0;
    std::uint64_t spawnMs = 0;
    OnboardSensorSpec sensor;
    bool emitsCpm = false;
    bool canBus = false;
};

struct VruSpec {
    std::vector<Vec2> waypoints;
    double speed = 1.4;
    std::uint64_t startMs = 0;
    bool tag = true;
    ObjectClass classification = ObjectClass::pedestrian;
};

struct ActorSpec {
    std::string name;
    ActorKind kind = ActorKind::vehicle;
    std::uint32_t station = 0;
    VehicleSpec vehicle;
    VruSpec vru;
};

enum class CpmAttackMode : std::uint8_t { falseState, ghost, suppress };
enum class SpatAttackMode : std::uint8_t { allGreen, conflictingPair };
enum class OnboardAttackMode : std::uint8_t { onboardCompromise, dosFlood, injection, dataModification };

std::string_view toString(CpmAttackMode mode);
std::string_view toString(SpatAttackMode mode);
std::string_view toString(OnboardAttackMode mode);

struct AttackSpec {
    std::uint64_t onsetMs = 5000;
    // s1
    CpmAttackMode cpmMode = CpmAttackMode::falseState;
    std::string victim;  // vehicle whose view the ghost is placed in
    std::string target;  // actor whose object is falsified or suppressed
    double falseSpeed = 0.0;
    double ghostAhead = 12.0;
    // s2, s4
    std::string hackedVehicle;
    std::optional<double> approachSpeed;
    // s3
    SpatAttackMode spatMode = SpatAttackMode::allGreen;
    std::uint8_t pairA = 1;
    std::uint8_t pairB = 3;
    // s5
    OnboardAttackMode onboardMode = OnboardAttackMode::onboardCompromise;
    std::string compromisedVehicle;
    std::uint16_t canTargetId = 0x100;
    std::optional<double> rateMultiplier;
};

struct Fixture {
    std::string name;
    SimConfig sim;
    IntersectionSpec intersection;
    LightSpec light;
    CameraSpec camera;
    RsuSpec rsu;
    std::vector<ActorSpec> actors;
    AttackSpec attack;
    DetectionConfig detection;
    MitigationPolicy policy = MitigationPolicy::defaults();
    CanSchedule can = CanSchedule::standard();
    double canTrainingMs = 20000.0;
};

// The detectors expected to catch each scenario's attack.
std::vector<DetectorId> designatedDetectors(ScenarioKind kind);

MapPayload mapOf(const IntersectionSpec& spec, StationId sender);
std::map<std::uint16_t, Polyline> centerlinesOf(const IntersectionSpec& spec);

// Cross-field checks (actor names, lane ids, attack references). Throws InvariantViolation.
void validate(const Fixture& fixture);

}  // namespace sentinel
