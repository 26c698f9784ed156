#include "sentinel/mitigation.hpp"

#include <algorithm>
#include <sstream>

namespace sentinel {

std::string_view toString(ActionKind kind) {
    switch (kind) {
        case ActionKind::broadcastDenm: return "broadcastDenm";
        case ActionKind::requestLightOverride: return "requestLightOverride";
        case ActionKind::hmiNotify: return "hmiNotify";
        case ActionKind::purgeOwnKeys: return "purgeOwnKeys";
    }
    return "?";
}

std::string_view toString(Outcome outcome) {
    switch (outcome) {
        case Outcome::delivered: return "delivered";
        case Outcome::ignored: return "ignored";
        case Outcome::pending: return "pending";
    }
    return "?";
}

std::string_view toString(OverrideTarget target) {
    switch (target) {
        case OverrideTarget::redYellowBlinking: return "redYellowBlinking";
        case OverrideTarget::allRed: return "allRed";
    }
    return "?";
}

std::string_view toString(AgentRole role) { return role == AgentRole::vehicle ? "vehicle" : "rsu"; }

ActionKind actionKindFromString(std::string_view name) {
    for (auto k : {ActionKind::broadcastDenm, ActionKind::requestLightOverride, ActionKind::hmiNotify,
                   ActionKind::purgeOwnKeys}) {
        if (toString(k) == name) {
            return k;
        }
    }
    throw InvariantViolation("unknown mitigation action '" + std::string(name) + "'");
}

OverrideTarget overrideTargetFromString(std::string_view name) {
    for (auto t : {OverrideTarget::redYellowBlinking, OverrideTarget::allRed}) {
        if (toString(t) == name) {
            return t;
        }
    }
    throw InvariantViolation("unknown override target '" + std::string(name) + "'");
}

DenmCause defaultCause(DetectorId detector, Anomaly anomaly) {
    switch (anomaly) {
        case Anomaly::ghost:
        case Anomaly::hijackedVehicle:
            return DenmCause::maliciousCpm;
        case Anomaly::conflictingGreens: return DenmCause::hackedTrafficLight;
        case Anomaly::imminentCollision: return DenmCause::vruCollision;
        case Anomaly::onboardCompromise: return DenmCause::onboardCompromise;
        case Anomaly::canDos:
        case Anomaly::canInjection:
            return DenmCause::canIntrusion;
        default: break;
    }
    switch (detector) {
        case DetectorId::ekfGate: return DenmCause::maliciousCpm;
        case DetectorId::spatConflict: return DenmCause::hackedTrafficLight;
        default: return DenmCause::hackedVehicle;
    }
}

MitigationPolicy MitigationPolicy::defaults() {
    MitigationPolicy p;
    const PolicyStep denm{ActionKind::broadcastDenm, std::nullopt, std::nullopt};
    const PolicyStep hmi{ActionKind::hmiNotify, std::nullopt, std::nullopt};
    const PolicyStep purge{ActionKind::purgeOwnKeys, std::nullopt, std::nullopt};
    const PolicyStep blink{ActionKind::requestLightOverride, std::nullopt, OverrideTarget::redYellowBlinking};
    const PolicyStep allRed{ActionKind::requestLightOverride, std::nullopt, OverrideTarget::allRed};

    for (auto role : {AgentRole::vehicle, AgentRole::rsu}) {
        const bool rsu = role == AgentRole::rsu;
        p.set(role, DetectorId::security, Anomaly::badSignature, {hmi});
        p.set(role, DetectorId::plausibility, Anomaly::implausiblePayload, {hmi});
        p.set(role, DetectorId::consistency, Anomaly::inconsistentStream, rsu ? std::vector{denm} : std::vector{hmi});
        for (auto a : {Anomaly::positionUsurpation, Anomaly::ghost, Anomaly::hijackedVehicle}) {
            p.set(role, DetectorId::crossCheck, a, rsu ? std::vector{denm, blink} : std::vector{denm});
        }
        p.set(role, DetectorId::ekfGate, Anomaly::inconsistentStream, {denm});
        p.set(role, DetectorId::spatConflict, Anomaly::conflictingGreens, rsu ? std::vector{denm, blink} : std::vector{denm});
        p.set(role, DetectorId::spatConflict, Anomaly::implausiblePayload, rsu ? std::vector{denm, blink} : std::vector{denm});
        p.set(role, DetectorId::camPerceptionDeviation, Anomaly::stopLie, rsu ? std::vector{denm, blink} : std::vector{denm});
        p.set(role, DetectorId::vruCollision, Anomaly::imminentCollision, rsu ? std::vector{hmi, allRed} : std::vector{hmi});
        p.set(role, DetectorId::canTiming, Anomaly::canDos, rsu ? std::vector{denm} : std::vector{denm, purge});
        p.set(role, DetectorId::canTiming, Anomaly::canInjection, rsu ? std::vector{denm} : std::vector{denm, purge});
        p.set(role, DetectorId::onboardMonitor, Anomaly::onboardCompromise,
              rsu ? std::vector{denm} : std::vector{denm, purge});
    }
    return p;
}

void MitigationPolicy::set(AgentRole role, DetectorId detector, Anomaly anomaly, std::vector<PolicyStep> steps) {
    table_[{role, detector, anomaly}] = std::move(steps);
}

const std::vector<PolicyStep>* MitigationPolicy::find(AgentRole role, DetectorId detector, Anomaly anomaly) const {
    auto it = table_.find({role, detector, anomaly});
    return it == table_.end() ? nullptr : &it->second;
}

void MitigationPolicy::validateTotal() const {
    for (auto role : {AgentRole::vehicle, AgentRole::rsu}) {
        for (auto d : kAllDetectors) {
            for (auto a : anomaliesOf(d)) {
                const auto* steps = find(role, d, a);
                if (!steps || steps->empty()) {
                    std::ostringstream os;
                    os << "no mitigation for " << toString(role) << '/' << toString(d) << '/' << toString(a);
                    throw UnmappedAnomaly(os.str());
                }
                for (const auto& s : *steps) {
                    if (s.kind == ActionKind::requestLightOverride && !s.target) {
                        throw UnmappedAnomaly("light override without target for " + std::string(toString(d)));
                    }
                }
            }
        }
    }
}

std::vector<MitigationAction> route(const DetectionReport& report, const MitigationPolicy& policy, AgentRole role,
                                    std::uint64_t nowMs) {
    const auto* steps = policy.find(role, report.detector, report.anomaly);
    if (!steps || steps->empty()) {
        std::ostringstream os;
        os << "no mitigation for " << toString(role) << '/' << toString(report.detector) << '/'
           << toString(report.anomaly);
        throw UnmappedAnomaly(os.str());
    }
    std::vector<MitigationAction> out;
    for (const auto& s : *steps) {
        MitigationAction a;
        a.kind = s.kind;
        a.issuedAtMs = nowMs;
        if (s.kind == ActionKind::broadcastDenm) {
            a.cause = s.cause.value_or(defaultCause(report.detector, report.anomaly));
        }
        if (s.kind == ActionKind::requestLightOverride) {
            a.target = s.target;
        }
        std::ostringstream text;
        text << toString(report.detector) << ": " << toString(report.anomaly);
        a.text = text.str();
        out.push_back(std::move(a));
    }
    std::stable_partition(out.begin(), out.end(),
                          [](const MitigationAction& a) { return a.kind != ActionKind::purgeOwnKeys; });
    return out;
}

}  // namespace sentinel
