#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "sentinel/errors.hpp"

namespace sentinel {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

struct StationId {
    std::uint32_t value = 0;

    constexpr bool known() const { return value != 0; }
    friend constexpr auto operator<=>(StationId, StationId) = default;
};

// Bounds shared by every KinematicState.
inline constexpr double kRegionHalfWidth = 500.0;
inline constexpr double kMaxSpeed = 100.0;
inline constexpr double kMaxAbsAccel = 20.0;
inline constexpr std::size_t kMaxCpmObjects = 128;

struct KinematicState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // radians, [0, 2pi)
    double speed = 0.0;
    double accel = 0.0;

    friend bool operator==(const KinematicState&, const KinematicState&) = default;
};

// Wraps an arbitrary angle into [0, 2pi).
double normalizeHeading(double radians);
// Signed smallest difference a - b, in (-pi, pi].
double angleDiff(double a, double b);

struct FieldOfView {
    double originX = 0.0;
    double originY = 0.0;
    double orientation = 0.0;
    double range = 0.0;
    double halfAngle = 0.0;  // (0, pi]; pi means omnidirectional

    // Positive margin grows the sector, negative shrinks it.
    bool contains(double x, double y, double margin = 0.0) const;
    friend bool operator==(const FieldOfView&, const FieldOfView&) = default;
};

enum class ObjectClass : std::uint8_t { vehicle = 0, pedestrian = 1, cyclist = 2, unknown = 3 };

struct PerceivedObject {
    std::uint16_t objectId = 0;
    KinematicState state;
    double confidence = 1.0;
    ObjectClass classification = ObjectClass::unknown;

    friend bool operator==(const PerceivedObject&, const PerceivedObject&) = default;
};

struct CamPayload {
    StationId sender;
    KinematicState state;
    std::uint64_t genTime = 0;

    friend bool operator==(const CamPayload&, const CamPayload&) = default;
};

struct CpmPayload {
    StationId sender;
    FieldOfView sensorFov;
    std::vector<PerceivedObject> objects;
    std::uint64_t genTime = 0;

    friend bool operator==(const CpmPayload&, const CpmPayload&) = default;
};

enum class DenmCause : std::uint8_t {
    maliciousCpm = 0,
    hackedVehicle = 1,
    hackedTrafficLight = 2,
    vruCollision = 3,
    onboardCompromise = 4,
    canIntrusion = 5,
};

struct DenmPayload {
    StationId sender;
    DenmCause cause = DenmCause::maliciousCpm;
    KinematicState eventState;
    StationId offender;
    Digest evidenceDigest{};
    std::uint64_t genTime = 0;

    friend bool operator==(const DenmPayload&, const DenmPayload&) = default;
};

enum class SignalState : std::uint8_t { red = 0, yellow = 1, green = 2, redYellowBlinking = 3 };

struct SignalPhase {
    std::uint8_t signalGroup = 0;
    SignalState state = SignalState::red;
    std::uint32_t timeToChangeMs = 0;

    friend bool operator==(const SignalPhase&, const SignalPhase&) = default;
};

struct SpatPayload {
    StationId sender;
    std::vector<SignalPhase> phases;
    std::uint64_t genTime = 0;

    friend bool operator==(const SpatPayload&, const SpatPayload&) = default;
};

enum class Approach : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

struct LaneConnection {
    std::uint16_t laneId = 0;
    Approach ingress = Approach::N;
    Approach egress = Approach::S;
    std::uint8_t signalGroup = 0;

    friend bool operator==(const LaneConnection&, const LaneConnection&) = default;
};

struct MapPayload {
    StationId sender;
    std::vector<LaneConnection> lanes;

    friend bool operator==(const MapPayload&, const MapPayload&) = default;
};

enum class MessageType : std::uint8_t {
    cam = 0x01,
    cpm = 0x02,
    denm = 0x03,
    spat = 0x04,
    map = 0x05,
    certificate = 0x10,
    signedMessage = 0x11,
};

using Payload = std::variant<CamPayload, CpmPayload, DenmPayload, SpatPayload, MapPayload>;

MessageType typeOf(const Payload& payload);
std::string_view toString(MessageType type);
std::string_view toString(DenmCause cause);
std::string_view toString(SignalState state);
std::string_view toString(ObjectClass cls);
std::string_view toString(Approach approach);

// Throw InvariantViolation when the value breaks its type invariants.
void validate(const KinematicState& state);
void validate(const CamPayload& payload);
void validate(const CpmPayload& payload);
void validate(const DenmPayload& payload);
void validate(const SpatPayload& payload);
void validate(const MapPayload& payload);
void validate(const Payload& payload);

Bytes encode(const Payload& payload);
Payload decode(ByteView bytes);

// Reads the type tag without decoding; MalformedMessage when empty.
MessageType peekType(ByteView bytes);

}  // namespace sentinel

template <>
struct std::hash<sentinel::StationId> {
    std::size_t operator()(sentinel::StationId id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
