#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sentinel/ekf.hpp"
#include "sentinel/geometry.hpp"
#include "sentinel/messages.hpp"
#include "sentinel/track.hpp"
#include "sentinel/trust.hpp"

namespace sentinel {

enum class DetectorId : std::uint8_t {
    security,
    plausibility,
    consistency,
    crossCheck,
    ekfGate,
    spatConflict,
    camPerceptionDeviation,
    vruCollision,
    canTiming,
    onboardMonitor,
};

enum class Anomaly : std::uint8_t {
    badSignature,
    implausiblePayload,
    inconsistentStream,
    positionUsurpation,
    ghost,
    hijackedVehicle,
    conflictingGreens,
    stopLie,
    imminentCollision,
    canDos,
    canInjection,
    onboardCompromise,
};

inline constexpr DetectorId kAllDetectors[] = {
    DetectorId::security,      DetectorId::plausibility, DetectorId::consistency,
    DetectorId::crossCheck,    DetectorId::ekfGate,      DetectorId::spatConflict,
    DetectorId::camPerceptionDeviation, DetectorId::vruCollision, DetectorId::canTiming,
    DetectorId::onboardMonitor,
};

std::string_view toString(DetectorId id);
std::string_view toString(Anomaly anomaly);
DetectorId detectorFromString(std::string_view name);
Anomaly anomalyFromString(std::string_view name);

// The anomaly classes each detector can raise.
std::span<const Anomaly> anomaliesOf(DetectorId detector);

struct Offender {
    enum class Kind : std::uint8_t { none, station, canId };
    Kind kind = Kind::none;
    std::uint32_t value = 0;

    static Offender station(StationId id) { return {Kind::station, id.value}; }
    static Offender can(std::uint16_t id) { return {Kind::canId, id}; }

    friend bool operator==(const Offender&, const Offender&) = default;
};

struct TrackRef {
    TrackSource source = TrackSource::cam;
    std::uint32_t subject = 0;

    friend bool operator==(const TrackRef&, const TrackRef&) = default;
};

struct DetectionReport {
    DetectorId detector = DetectorId::security;
    Anomaly anomaly = Anomaly::badSignature;
    Offender offender;
    std::vector<Digest> evidence;
    std::uint64_t simTimeMs = 0;
    std::optional<TrackSource> source;
    std::vector<TrackRef> tracks;
    std::optional<double> ttcS;
    std::optional<KinematicState> location;
    double score = 0.0;  // detector-specific magnitude (NIS, m/s deviation, share, ...)
};

// Evidence present (or two tracks for vruCollision) and the anomaly belongs to the detector.
bool wellFormed(const DetectionReport& report);

struct Region {
    double minX = -kRegionHalfWidth;
    double maxX = kRegionHalfWidth;
    double minY = -kRegionHalfWidth;
    double maxY = kRegionHalfWidth;

    bool contains(double x, double y) const { return x >= minX && x <= maxX && y >= minY && y <= maxY; }
};

struct PlausibilityConfig {
    double maxSpeed = 70.0;
    double maxAbsAccel = 10.0;
    Region region;
};

struct ConsistencyConfig {
    double baseGate = 0.5;
    double slack = 0.2;
    double teleport = 50.0;
};

struct CrossCheckConfig {
    double rDup = 1.5;
    double rAssoc = 2.0;
    int windowK = 3;
    // Only positions this far inside a field of view are expected to be seen.
    double fovMargin = 2.0;
};

struct CamPerceptionConfig {
    double sigmaCamSpeed = 0.05;
    double sigmaPerceivedSpeed = 0.15;
    double gateSigmas = 3.0;
    double minPerceivedSpeed = 5.0;
    double assocRadius = 2.0;
    int windowK = 3;
};

struct CollisionConfig {
    double horizonS = 4.0;
    double dMin = 2.0;
    double accelWindowS = 1.0;
    double minThreatSpeed = 0.5;
    double minVruTrackS = 1.0;  // VRU velocity needs this much history before extrapolation
    int clearSteps = 10;  // predicate must stay false this long before a pair can report again
};

struct CanIdsConfig {
    double dosShare = 0.3;
    double dosWindowMs = 100.0;
    std::size_t dosMinFrames = 10;
    double injectionRatio = 0.6;
    double madK = 5.0;
    double madFloor = 0.01;  // MAD floor as a fraction of the median period
    double windowMs = 1000.0;
    std::size_t minTrainFrames = 100;
    std::size_t minWindowIntervals = 5;
};

struct DetectionConfig {
    GateConfig gate;
    PlausibilityConfig plausibility;
    ConsistencyConfig consistency;
    CrossCheckConfig crossCheck;
    CamPerceptionConfig camPerception;
    CollisionConfig collision;
    CanIdsConfig can;
};

void validate(const DetectionConfig& cfg);

// --- level 1: local security checks

std::optional<DetectionReport> checkSecurity(const SignedMessage& msg, const Verifier& verifier,
                                             const Digest& digest, std::uint64_t nowMs);

// --- level 3 (single message) plausibility

std::optional<DetectionReport> checkPlausibility(const CamPayload& cam, const PlausibilityConfig& cfg,
                                                 const Digest& digest, std::uint64_t nowMs);
std::optional<DetectionReport> checkPlausibility(const CpmPayload& cpm, const PlausibilityConfig& cfg,
                                                 const Digest& digest, std::uint64_t nowMs);

// --- level 2: consistency of successive CAMs from one sender

double consistencyGate(double dtS, double previousSpeed, const ConsistencyConfig& cfg);

std::optional<DetectionReport> checkConsistency(const Track& history, const CamPayload& next,
                                                const ConsistencyConfig& cfg, const Digest& digest,
                                                std::uint64_t nowMs);

// --- cross checks against local perception

struct Advertised {
    StationId sender;
    KinematicState state;
    Digest evidence{};
};

// Positions reported by others that nothing local confirms.
std::vector<std::size_t> findGhosts(std::span<const Vec2> remote, std::span<const PerceivedObject> local,
                                    const FieldOfView& localFov, const CrossCheckConfig& cfg);
// Local objects inside the remote's declared view that the remote does not report.
std::vector<std::size_t> findOmitted(std::span<const PerceivedObject> remote, std::span<const PerceivedObject> local,
                                     const FieldOfView& remoteFov, const CrossCheckConfig& cfg);
// Pairs of distinct stations advertising the same occupied spot.
std::vector<std::pair<std::size_t, std::size_t>> findUsurpations(std::span<const Advertised> advertised,
                                                                 std::span<const PerceivedObject> local,
                                                                 const CrossCheckConfig& cfg);

class CrossChecker {
public:
    explicit CrossChecker(CrossCheckConfig cfg = {}) : cfg_(cfg) {}

    // Received CPM against local objects observed at the CPM's generation time.
    std::vector<DetectionReport> checkCpm(const CpmPayload& cpm, const Digest& digest,
                                          std::span<const PerceivedObject> local, const FieldOfView& localFov,
                                          std::uint64_t nowMs);

    // CAM-advertised states (one per sender, same generation time) against local objects.
    std::vector<DetectionReport> checkAdvertised(std::span<const Advertised> advertised,
                                                 std::span<const PerceivedObject> local,
                                                 const FieldOfView& localFov, std::uint64_t nowMs);

private:
    struct Key {
        Anomaly anomaly;
        std::uint32_t a;
        std::uint32_t b;
        auto operator<=>(const Key&) const = default;
    };

    // Advances the window for `key`; true when it reaches K.
    bool hit(const Key& key);
    void clearUnhit(Anomaly anomaly, std::uint32_t a, const std::set<Key>& hitNow);

    CrossCheckConfig cfg_;
    std::map<Key, int> runs_;
    std::map<StationId, std::uint64_t> firstSeen_;
};

// --- model-driven VRU monitoring (EKF + NIS gates)

struct SensorNoise {
    double sigmaPos = 0.5;
    double sigmaVel = 0.2;
};

// Keeps one filter per (CPM sender, object). When the ego sensor associates a detection the filter is
// driven by it and CPM content is validated against the filter; otherwise CPMs drive the filter.
class VruMonitor {
public:
    VruMonitor(GateConfig gate, SensorNoise onboard, SensorNoise cpm, double assocRadius = 2.0);

    std::vector<DetectionReport> onOnboard(std::uint64_t timeMs, std::span<const PerceivedObject> detections);
    std::vector<DetectionReport> onCpm(const CpmPayload& cpm, const Digest& digest, std::uint64_t nowMs);

    // Noise of a specific CPM sender's sensor; senders not registered use the constructor's `cpm`.
    void setSenderNoise(StationId sender, SensorNoise noise) { senderNoise_[sender.value] = noise; }

    // Every NIS value computed so far, per source; used for health statistics.
    const std::vector<double>& nisLog(TrackSource source, MeasurementKind kind) const;

private:
    struct Snapshot {
        std::uint64_t timeMs;
        EkfState state;
    };
    struct Filter {
        EkfState ekf;
        std::vector<Snapshot> snapshots;  // onboard-driven states, newest last
        std::map<std::pair<TrackSource, MeasurementKind>, NisGate> gates;
        std::vector<Digest> recentEvidence;
    };
    using FilterKey = std::pair<std::uint32_t, std::uint16_t>;

    static bool outlier(const Filter& f, TrackSource source, MeasurementKind kind);
    std::optional<DetectionReport> gate(Filter& f, const FilterKey& key, TrackSource source, MeasurementKind kind,
                                        double nis, const Digest& evidence, std::uint64_t nowMs);

    GateConfig gateCfg_;
    SensorNoise onboard_;
    SensorNoise cpm_;
    std::map<std::uint32_t, SensorNoise> senderNoise_;
    double assocRadius_;
    std::map<FilterKey, Filter> filters_;
    std::map<std::pair<TrackSource, MeasurementKind>, std::vector<double>> nis_;
};

// --- SPaT validity

class SpatHistory {
public:
    struct Entry {
        SignalState state;
        std::uint64_t genTimeMs;
        std::uint32_t timeToChangeMs;
    };
    void record(const SpatPayload& spat);
    std::optional<Entry> last(std::uint8_t group) const;

private:
    std::map<std::uint8_t, Entry> entries_;
};

// Throws UnknownSignalGroup for groups missing from the matrix.
std::optional<DetectionReport> checkSpatConflicts(const SpatPayload& spat, const ConflictMatrix& cm,
                                                  const SpatHistory* history, const Digest& digest,
                                                  std::uint64_t nowMs, std::uint64_t toleranceMs = 100);

// --- CAM versus roadside perception

// Deviation check on the latest CAM sample; nullopt when not comparable at that time.
struct DeviationSample {
    double deviation = 0.0;  // perceived speed minus CAM speed
    bool exceeds = false;
};
std::optional<DeviationSample> checkCamPerceptionDeviation(const Track& cam, const Track& perceived,
                                                           const CamPerceptionConfig& cfg);

class CamPerceptionMonitor {
public:
    explicit CamPerceptionMonitor(CamPerceptionConfig cfg = {}) : cfg_(cfg) {}

    std::optional<DetectionReport> observe(StationId sender, const Track& camTrack,
                                           const std::map<std::uint32_t, Track>& perceived, const Digest& digest,
                                           std::uint64_t nowMs);

    std::optional<std::uint32_t> associated(StationId sender) const;

private:
    struct State {
        std::optional<std::uint32_t> object;
        int run = 0;
        std::vector<Digest> evidence;
    };
    CamPerceptionConfig cfg_;
    std::map<StationId, State> states_;
};

// --- collision prediction

struct ClosestApproach {
    double timeS = 0.0;
    double distance = 0.0;
};

// Linear motion of both parties, t restricted to [0, horizon].
ClosestApproach closestApproach(Vec2 p1, Vec2 v1, Vec2 p2, Vec2 v2, double horizonS);

// Threat motion along its velocity with constant acceleration, stopping at zero speed.
ClosestApproach closestApproach(Vec2 vruPos, Vec2 vruVel, Vec2 threatPos, Vec2 threatDir, double threatSpeed,
                                double threatAccel, double horizonS);

// Least-squares line through the speed samples of the last `windowS`: slope is the along-track
// acceleration, `speed` the fitted value at the newest sample. Falls back to the latest speed and
// zero acceleration with fewer than 6 samples or less than half a window of history.
struct SpeedFit {
    double speed = 0.0;
    double accel = 0.0;
};
SpeedFit fitSpeed(const Track& track, double windowS);

// Smoothed motion over the same window: direction is the speed-weighted circular mean of the
// sample headings, position the mean of the samples carried forward to the newest time.
struct MotionFit {
    Vec2 position;
    Vec2 direction;
    SpeedFit speed;
};
MotionFit fitMotion(const Track& track, double windowS);

struct CollisionThreat {
    ClosestApproach cpa;
    std::size_t threatIndex;
};

std::optional<CollisionThreat> predictVruCollision(const Track& vru, std::span<const Track* const> threats,
                                                   const CollisionConfig& cfg);

// Rising-edge reporting per (vru, threat) pair.
class CollisionMonitor {
public:
    explicit CollisionMonitor(CollisionConfig cfg = {}) : cfg_(cfg) {}

    std::vector<DetectionReport> observe(const std::map<std::uint32_t, Track>& vrus,
                                         const std::map<std::uint32_t, Track>& threats, std::uint64_t nowMs);

private:
    CollisionConfig cfg_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> state_;  // >0 active, <0 clearing count
};

// --- onboard compromise signal

class OnboardMonitor {
public:
    std::optional<DetectionReport> observe(bool asserted, StationId self, std::uint64_t nowMs);

private:
    bool last_ = false;
};

Digest evidenceDigest(std::string_view label, ByteView data);

}  // namespace sentinel
