#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sentinel/geometry.hpp"
#include "sentinel/messages.hpp"
#include "sentinel/mitigation.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/trust.hpp"

namespace sentinel {

// --- message bus

// A transmitted envelope together with the metadata every receiver needs.
struct Envelope {
    SignedMessage msg;
    Bytes bytes;
    Digest digest{};
    MessageType type = MessageType::cam;
    StationId sender;
    std::uint64_t genTime = 0;
};
using EnvelopePtr = std::shared_ptr<const Envelope>;

EnvelopePtr makeEnvelope(SignedMessage msg, MessageType type, StationId sender, std::uint64_t genTime);

struct BusEvent {
    std::uint64_t deliverAtStep = 0;
    EnvelopePtr msg;
    StationId sender;
    std::size_t receiver = 0;
};

// Broadcast medium with independent per-receiver loss. A message sent during step k is
// delivered at step k + 1 + latencySteps; the sender never hears itself.
class Bus {
public:
    Bus(std::uint64_t seed, double lossProbability, std::uint32_t latencySteps);

    std::size_t attach(StationId station, std::initializer_list<MessageType> subscriptions);
    std::size_t size() const { return endpoints_.size(); }
    StationId station(std::size_t endpoint) const { return endpoints_.at(endpoint).station; }

    struct Fanout {
        std::vector<std::size_t> queued;
        std::vector<std::size_t> dropped;
    };
    Fanout broadcast(std::uint64_t step, std::size_t senderEndpoint, const EnvelopePtr& msg);

    // Removes the events due at `step`; one inbox per endpoint, ordered by
    // (type tag, sender, generation time, digest).
    std::vector<std::vector<EnvelopePtr>> deliver(std::uint64_t step);
    std::size_t pending() const { return queue_.size(); }

private:
    struct Endpoint {
        StationId station;
        std::uint32_t mask = 0;
        std::uint64_t txCounter = 0;
    };

    std::uint64_t seed_;
    double loss_;
    std::uint32_t latency_;
    std::vector<Endpoint> endpoints_;
    std::multimap<std::uint64_t, BusEvent> queue_;
};

// --- physical world view

struct PhysicalActor {
    std::size_t index = 0;  // fixture order
    ActorKind kind = ActorKind::vehicle;
    ObjectClass classification = ObjectClass::vehicle;
    KinematicState state;
    bool present = false;
    int lane = -1;      // vehicles only
    double pathS = 0.0;  // arc length along the vehicle's path
};

// --- signal program and controller

class SignalProgram {
public:
    explicit SignalProgram(const IntersectionSpec& spec);

    std::uint64_t cycleMs() const { return cycle_; }
    const std::vector<std::uint8_t>& groups() const { return groups_; }
    SignalPhase phaseOf(std::uint8_t group, std::uint64_t timeMs) const;
    std::vector<SignalPhase> phasesAt(std::uint64_t timeMs) const;

private:
    struct Slot {
        std::uint64_t start;
        PhaseSpec phase;
    };
    std::vector<Slot> slots_;
    std::map<std::uint8_t, std::size_t> slotOf_;
    std::vector<std::uint8_t> groups_;
    std::uint64_t cycle_ = 0;
    std::uint64_t offset_ = 0;
};

inline constexpr std::uint32_t kIndefiniteMs = 0xFFFFFFFFU;

struct OverrideRequest {
    OverrideTarget target = OverrideTarget::redYellowBlinking;
    std::uint64_t reportId = 0;
    StationId requester;
    std::uint64_t issuedStep = 0;
};

struct OverrideResolution {
    OverrideRequest request;
    Outcome outcome = Outcome::pending;
};

class TrafficLight {
public:
    TrafficLight(const IntersectionSpec& spec, LightSpec cfg);

    const SignalProgram& program() const { return program_; }
    // What drivers physically see, override included.
    SignalPhase physical(std::uint8_t group, std::uint64_t timeMs) const;
    std::vector<SignalPhase> physicalPhases(std::uint64_t timeMs) const;

    void setHacked(bool hacked) { hacked_ = hacked; }
    bool hacked() const { return hacked_; }
    std::optional<OverrideTarget> activeOverride() const { return override_; }

    // Queued now, applied or ignored at the next resolve().
    void request(const OverrideRequest& req) { pending_.push_back(req); }
    std::vector<OverrideResolution> resolve(Rng& rng);

private:
    SignalProgram program_;
    LightSpec cfg_;
    bool hacked_ = false;
    std::optional<OverrideTarget> override_;
    std::vector<OverrideRequest> pending_;
};

// --- roadside camera

struct CameraObservation {
    PerceivedObject object;
    bool measured = true;
    std::size_t actorIndex = 0;
};

// Fixed camera with Gaussian noise, missed detections and a short coasting tracker.
// Object ids are actor index + 1.
class CameraSensor {
public:
    CameraSensor(CameraSpec spec, std::uint64_t seed);

    const CameraSpec& spec() const { return spec_; }
    std::vector<CameraObservation> capture(std::span<const PhysicalActor> actors, double dtS);

private:
    struct TrackState {
        PerceivedObject last;
        int coasted = 0;
    };
    CameraSpec spec_;
    Rng rng_;
    std::map<std::size_t, TrackState> tracks_;
};

// Noisy detections of whatever lies inside `fov`, ids are actor index + 1.
std::vector<PerceivedObject> senseObjects(std::span<const PhysicalActor> actors, const FieldOfView& fov,
                                          double sigmaPos, double sigmaVel, Rng& rng,
                                          std::optional<std::size_t> exclude = std::nullopt);

// --- UWB

struct UwbFix {
    std::uint32_t tagId = 0;
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

inline constexpr double kUwbMaxRange = 100.0;

// Throws OutOfRange when the tag is farther than `range` from the anchor.
UwbFix uwbLocate(Vec2 anchor, std::uint32_t tagId, Vec2 truePosition, double sigma, Rng& rng,
                 double range = kUwbMaxRange);

Vec2 velocityOf(const KinematicState& s);

}  // namespace sentinel
