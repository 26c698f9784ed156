#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/detection.hpp"

namespace sentinel {

enum class ActionKind : std::uint8_t { broadcastDenm, requestLightOverride, hmiNotify, purgeOwnKeys };
enum class Outcome : std::uint8_t { delivered, ignored, pending };
enum class OverrideTarget : std::uint8_t { redYellowBlinking, allRed };
enum class AgentRole : std::uint8_t { vehicle, rsu };

std::string_view toString(ActionKind kind);
std::string_view toString(Outcome outcome);
std::string_view toString(OverrideTarget target);
std::string_view toString(AgentRole role);
ActionKind actionKindFromString(std::string_view name);
OverrideTarget overrideTargetFromString(std::string_view name);

struct PolicyStep {
    ActionKind kind = ActionKind::hmiNotify;
    std::optional<DenmCause> cause;         // broadcastDenm
    std::optional<OverrideTarget> target;   // requestLightOverride

    friend bool operator==(const PolicyStep&, const PolicyStep&) = default;
};

struct MitigationAction {
    ActionKind kind = ActionKind::hmiNotify;
    std::optional<DenmCause> cause;
    std::optional<OverrideTarget> target;
    std::string text;
    std::uint64_t issuedAtMs = 0;
    Outcome outcome = Outcome::pending;
};

// DENM cause a report maps to when the policy step does not name one.
DenmCause defaultCause(DetectorId detector, Anomaly anomaly);

class MitigationPolicy {
public:
    // Default action sets per role.
    static MitigationPolicy defaults();

    void set(AgentRole role, DetectorId detector, Anomaly anomaly, std::vector<PolicyStep> steps);
    const std::vector<PolicyStep>* find(AgentRole role, DetectorId detector, Anomaly anomaly) const;

    // Throws UnmappedAnomaly unless every (role, detector, anomaly) a detector can raise maps to >= 1 action.
    void validateTotal() const;

private:
    std::map<std::tuple<AgentRole, DetectorId, Anomaly>, std::vector<PolicyStep>> table_;
};

// Ordered actions for `report`; purgeOwnKeys is always placed after any broadcastDenm.
std::vector<MitigationAction> route(const DetectionReport& report, const MitigationPolicy& policy, AgentRole role,
                                    std::uint64_t nowMs);

}  // namespace sentinel
