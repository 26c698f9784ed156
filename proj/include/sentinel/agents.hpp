#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sentinel/attacks.hpp"
#include "sentinel/can_ids.hpp"
#include "sentinel/detection.hpp"
#include "sentinel/mitigation.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/world.hpp"

namespace sentinel {

inline constexpr double kComfortDecel = 3.0;
inline constexpr double kEmergencyDecel = 8.0;
inline constexpr double kCruiseAccel = 2.0;
inline constexpr double kBrakeTrigger = 1.5;  // start braking for a stop once v^2/2d reaches this
inline constexpr double kFollowGap = 8.0;
inline constexpr std::uint64_t kSpatFreshMs = 3000;
inline constexpr double kVruAccel = 1.0;
inline constexpr double kVruDecel = 2.0;
inline constexpr std::uint64_t kVruHaltMs = 3000;
inline constexpr double kVruWarningRadius = 10.0;

// Deceleration that brings `speed` to rest over `distance`.
double comfortStopDecel(double speed, double distance);

struct HmiEntry {
    std::uint64_t timeMs = 0;
    std::string text;
    bool effective = true;
};

// State shared by every communicating agent.
struct AgentCore {
    std::string name;
    std::optional<std::size_t> actorIndex;
    StationId station;
    AgentRole role = AgentRole::vehicle;
    std::size_t endpoint = 0;
    std::optional<Hsm> hsm;
    std::vector<HmiEntry> hmi;
    bool hmiEffective = true;
    std::set<Digest> seenDenms;

    struct Repeat {
        EnvelopePtr env;
        std::uint64_t nextStep;
        std::uint64_t untilMs;
    };
    std::vector<Repeat> repeats;

    bool canTransmit() const { return hsm && !hsm->purged(); }
};

// Services the simulation offers to agents during their tick.
class AgentHost {
public:
    virtual ~AgentHost() = default;

    virtual std::uint64_t step() const = 0;
    virtual std::uint64_t nowMs() const = 0;
    virtual double dtS() const = 0;
    virtual const Verifier& verifier() const = 0;
    virtual std::span<const PhysicalActor> actors() const = 0;
    virtual SignalPhase physicalSignal(std::uint8_t group) const = 0;

    // `accepted` is true only when the agent goes on to use the content.
    virtual void received(const AgentCore& receiver, const Envelope& env, VerifyResult verdict, bool accepted,
                          const std::string* hmi) = 0;
    // Signs and broadcasts; nullptr when the agent can no longer sign.
    virtual EnvelopePtr transmit(AgentCore& from, const Payload& payload) = 0;
    virtual void rebroadcast(AgentCore& from, const EnvelopePtr& env) = 0;
    // Security Notification API entry point.
    virtual void notify(AgentCore& from, DetectionReport report) = 0;
};

// Renders a received DENM for an HMI log.
std::string describeDenm(const DenmPayload& denm);

// Lead-in, lane centerline and exit run, corner-smoothed. `stopS` receives the stop line position.
Path buildVehiclePath(const LaneSpec& lane, const IntersectionSpec& ix, double* stopS);

class VehicleAgent {
public:
    VehicleAgent(AgentCore core, const ActorSpec& spec, const LaneSpec& lane, const Fixture& fixture);

    AgentCore core;

    bool present() const { return present_; }
    bool hijacked() const { return hijacked_; }
    const VehicleSpec& spec() const { return spec_; }
    std::uint16_t laneId() const { return lane_.id; }
    std::uint8_t signalGroup() const { return lane_.signalGroup; }
    double pathS() const { return s_; }
    double stopS() const { return stopS_; }
    const Path& path() const { return path_; }
    KinematicState state() const;

    // Spawns, advances or retires the vehicle; returns true if it crossed its stop line.
    bool physics(std::uint64_t nowMs, double dtS);
    void tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox);

    // Attack hooks.
    void hijack(double approachSpeed, std::uint64_t nowMs);
    void attachCan(std::vector<CanFrame> frames, CanBaseline baseline, const CanIdsConfig& cfg);
    void setCompromiseSignal(OnboardCompromiseSignal signal) { compromise_ = signal; }

    // Last onboard detections, for tests and the trace.
    const std::vector<PerceivedObject>& onboardObjects() const { return onboardNow_; }
    const VruMonitor& vruMonitor() const { return vruMonitor_; }
    VruMonitor& vruMonitor() { return vruMonitor_; }

private:
    enum class Belief { go, caution, stop };

    FieldOfView sensorFov(const KinematicState& at) const;
    Belief believedSignal(const AgentHost& host) const;
    double decideAccel(const AgentHost& host);
    void handleDenm(const DenmPayload& denm, const Envelope& env, AgentHost& host, std::uint64_t nowMs);
    std::vector<PerceivedObject> localAt(std::uint64_t timeMs) const;

    VehicleSpec spec_;
    LaneSpec lane_;
    Path path_;
    double stopS_ = 0.0;
    double stopBuffer_ = 1.0;
    double s_ = 0.0;
    double speed_ = 0.0;
    double accel_ = 0.0;
    bool spawned_ = false;
    bool present_ = false;
    bool stopping_ = false;

    bool hijacked_ = false;
    double approachSpeed_ = 0.0;
    std::optional<GentleStopProfile> fakeProfile_;
    std::uint64_t hijackMs_ = 0;

    Rng sensorRng_;
    std::vector<PerceivedObject> onboardNow_;
    struct Snapshot {
        std::uint64_t timeMs;
        KinematicState ego;
        FieldOfView fov;
        std::vector<PerceivedObject> objects;
    };
    std::deque<Snapshot> snapshots_;

    DetectionConfig det_;
    std::uint32_t cpmEvery_ = 1;
    std::map<StationId, Track> camTracks_;
    CrossChecker crossChecker_;
    VruMonitor vruMonitor_;
    std::map<StationId, SpatPayload> spats_;
    std::set<StationId> distrustedSpat_;
    std::set<StationId> distrustedCpm_;

    std::vector<CanFrame> canFrames_;
    std::size_t canNext_ = 0;
    std::optional<CanDetector> canDetector_;
    OnboardCompromiseSignal compromise_;
    OnboardMonitor onboardMonitor_;
};

class RsuAgent {
public:
    RsuAgent(AgentCore core, const Fixture& fixture, ConflictMatrix conflicts);

    AgentCore core;

    const RsuSpec& spec() const { return spec_; }
    KinematicState state() const { return {spec_.anchor.x, spec_.anchor.y, 0.0, 0.0, 0.0}; }
    void setCpmAttack(std::optional<MaliciousCpmParams> params) { cpmAttack_ = std::move(params); }

    void tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox, const std::vector<EnvelopePtr>& spatLink,
              const std::vector<CameraObservation>& camera, const std::vector<UwbFix>& uwb);

    const std::map<std::uint32_t, Track>& vruTracks() const { return uwbTracks_; }
    const std::map<std::uint32_t, Track>& vehicleTracks() const { return perceivedVehicles_; }

private:
    std::vector<PerceivedObject> localAt(std::uint64_t timeMs) const;
    void updateCamera(std::uint64_t nowMs, const std::vector<CameraObservation>& camera);
    void updateUwb(std::uint64_t nowMs, const std::vector<UwbFix>& uwb);

    RsuSpec spec_;
    CameraSpec camera_;
    DetectionConfig det_;
    ConflictMatrix conflicts_;
    std::uint32_t cpmEverySteps_ = 1;

    std::deque<std::pair<std::uint64_t, std::vector<PerceivedObject>>> cameraHistory_;
    std::map<std::uint32_t, Track> perceivedVehicles_;
    std::map<std::uint32_t, EkfState> uwbFilters_;
    std::map<std::uint32_t, Track> uwbTracks_;
    std::map<StationId, Track> camTracks_;

    CrossChecker crossChecker_;
    CamPerceptionMonitor camPerception_;
    CollisionMonitor collision_;
    SpatHistory spatHistory_;
    std::optional<MaliciousCpmParams> cpmAttack_;
};

class VruAgent {
public:
    VruAgent(AgentCore core, const ActorSpec& spec);

    AgentCore core;

    const VruSpec& spec() const { return spec_; }
    KinematicState state() const;
    bool halted(std::uint64_t nowMs) const { return nowMs < haltedUntil_; }
    std::uint32_t tagId() const { return static_cast<std::uint32_t>(*core.actorIndex + 1); }

    void physics(std::uint64_t nowMs, double dtS);
    void tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox);

private:
    VruSpec spec_;
    Path path_;
    double s_ = 0.0;
    double speed_ = 0.0;
    double accel_ = 0.0;
    std::uint64_t haltedUntil_ = 0;
};

}  // namespace sentinel
