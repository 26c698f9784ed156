#include "sentinel/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "sentinel/rng.hpp"

namespace sentinel {

std::vector<PerceivedObject> injectMaliciousCpm(std::vector<PerceivedObject> objects,
                                                const MaliciousCpmParams& params, const FieldOfView& fov) {
    switch (params.mode) {
        case CpmAttackMode::falseState:
            for (auto& o : objects) {
                if (o.objectId == params.targetObjectId) {
                    o.state.speed = params.falseSpeed;
                    o.state.accel = 0.0;
                }
            }
            break;
        case CpmAttackMode::ghost:
            if (params.ghost) {
                PerceivedObject g;
                g.objectId = params.ghostObjectId;
                g.state = *params.ghost;
                g.confidence = 0.9;
                g.classification = ObjectClass::vehicle;
                objects.push_back(g);
            }
            break;
        case CpmAttackMode::suppress:
            std::erase_if(objects, [&](const PerceivedObject& o) { return o.objectId == params.targetObjectId; });
            break;
    }
    std::erase_if(objects, [&](const PerceivedObject& o) { return !fov.contains(o.state.x, o.state.y); });
    return objects;
}

GentleStopProfile::GentleStopProfile(const Path& path, double onsetS, double onsetSpeed, double stopS)
    : path_(&path), s0_(onsetS), v0_(onsetSpeed), stopS_(std::max(stopS, onsetS)) {
    double d = stopS_ - s0_;
    decel_ = d > 1e-6 ? v0_ * v0_ / (2.0 * d) : 0.0;
}

KinematicState GentleStopProfile::at(double t) const {
    double v = v0_;
    double s = s0_;
    double a = 0.0;
    if (decel_ > 0.0) {
        double tStop = v0_ / decel_;
        double tc = std::clamp(t, 0.0, tStop);
        v = v0_ - decel_ * tc;
        s = s0_ + v0_ * tc - 0.5 * decel_ * tc * tc;
        a = t < tStop ? -decel_ : 0.0;
        if (t >= tStop) {
            v = 0.0;
            s = stopS_;
        }
    } else {
        v = 0.0;
    }
    Vec2 p = path_->pointAt(s);
    return {p.x, p.y, path_->headingAt(s), std::max(v, 0.0), a};
}

SpatPayload injectHackedSpat(const SpatPayload& honest, SpatAttackMode mode, std::uint8_t groupA,
                             std::uint8_t groupB) {
    SpatPayload out = honest;
    for (auto& ph : out.phases) {
        bool turnGreen = mode == SpatAttackMode::allGreen || ph.signalGroup == groupA || ph.signalGroup == groupB;
        if (turnGreen) {
            ph.state = SignalState::green;
            ph.timeToChangeMs = 10000;
        }
    }
    return out;
}

namespace {

double nominalPeriod(const CanSchedule& schedule, std::uint16_t id) {
    for (const auto& e : schedule.entries) {
        if (e.id == id) {
            return e.periodMs;
        }
    }
    return schedule.fastestPeriodMs();
}

}  // namespace

std::vector<CanFrame> injectCanAttack(std::vector<CanFrame> benign, const CanAttackParams& params,
                                      const CanSchedule& schedule, std::uint64_t seed) {
    Rng rng(seed, 0xA77, static_cast<std::uint64_t>(params.mode));
    switch (params.mode) {
        case OnboardAttackMode::dosFlood: {
            double period = schedule.fastestPeriodMs() / params.rateMultiplier;
            for (double t = params.onsetMs; t < params.endMs; t += period) {
                benign.push_back({0x000, {0, 0, 0, 0, 0, 0, 0, 0}, t});
            }
            break;
        }
        case OnboardAttackMode::injection: {
            double period = nominalPeriod(schedule, params.targetId) / params.rateMultiplier;
            for (double t = params.onsetMs + period / 2.0; t < params.endMs; t += period) {
                std::vector<std::uint8_t> payload(8);
                for (auto& b : payload) {
                    b = static_cast<std::uint8_t>(rng.bits());
                }
                benign.push_back({params.targetId, std::move(payload), t});
            }
            break;
        }
        case OnboardAttackMode::dataModification:
            for (auto& f : benign) {
                if (f.id == params.targetId && f.timestampMs >= params.onsetMs && f.timestampMs < params.endMs) {
                    for (auto& b : f.payload) {
                        b = static_cast<std::uint8_t>(rng.bits());
                    }
                }
            }
            break;
        case OnboardAttackMode::onboardCompromise:
            break;
    }
    std::stable_sort(benign.begin(), benign.end(), canOrder);
    return benign;
}

OnboardCompromiseSignal injectOnboardCompromise(std::uint64_t onsetMs) { return {onsetMs}; }

}  // namespace sentinel
