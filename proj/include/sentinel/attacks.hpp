#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentinel/canbus.hpp"
#include "sentinel/geometry.hpp"
#include "sentinel/messages.hpp"
#include "sentinel/scenario.hpp"

namespace sentinel {

// --- s1: RSU emits falsified CPM content

struct MaliciousCpmParams {
    CpmAttackMode mode = CpmAttackMode::falseState;
    std::uint16_t targetObjectId = 0;  // falsified or suppressed object
    double falseSpeed = 0.0;
    std::optional<KinematicState> ghost;  // placed by the caller, e.g. ahead of a victim
    std::uint16_t ghostObjectId = 0xFFF0;
};

// Rewrites the object list of an outgoing CPM. Objects outside `fov` after the rewrite are dropped.
std::vector<PerceivedObject> injectMaliciousCpm(std::vector<PerceivedObject> objects,
                                                const MaliciousCpmParams& params, const FieldOfView& fov);

// --- s2/s4: hacked vehicle advertising a gentle stop

// Constant deceleration v0^2/(2d) from the onset state to rest at `stopS` along `path`.
class GentleStopProfile {
public:
    GentleStopProfile(const Path& path, double onsetS, double onsetSpeed, double stopS);

    KinematicState at(double secondsSinceOnset) const;
    double deceleration() const { return decel_; }

private:
    const Path* path_;
    double s0_;
    double v0_;
    double stopS_;
    double decel_;
};

// --- s3: hacked traffic light

// Physical phases are untouched; only the broadcast copy is rewritten.
SpatPayload injectHackedSpat(const SpatPayload& honest, SpatAttackMode mode, std::uint8_t groupA = 0,
                             std::uint8_t groupB = 0);

// --- s5: in-vehicle attacks

struct CanAttackParams {
    OnboardAttackMode mode = OnboardAttackMode::dosFlood;
    std::uint16_t targetId = 0x100;
    double rateMultiplier = 10.0;
    double onsetMs = 0.0;
    double endMs = 0.0;
};

// dosFlood adds id 0x000 at rateMultiplier times the fastest nominal rate; injection adds frames of
// targetId at rateMultiplier times its nominal rate, midway between benign ones; dataModification
// rewrites payloads of targetId in place. Output stays in bus order.
std::vector<CanFrame> injectCanAttack(std::vector<CanFrame> benign, const CanAttackParams& params,
                                      const CanSchedule& schedule, std::uint64_t seed);

// Stand-in for the external image-anomaly detector: asserted from onset on.
struct OnboardCompromiseSignal {
    std::optional<std::uint64_t> onsetMs;

    bool asserted(std::uint64_t nowMs) const { return onsetMs && nowMs >= *onsetMs; }
};

OnboardCompromiseSignal injectOnboardCompromise(std::uint64_t onsetMs);

}  // namespace sentinel
