#include <algorithm>
#include <cmath>

#include "sentinel/agents.hpp"

namespace sentinel {

VruAgent::VruAgent(AgentCore c, const ActorSpec& spec) : core(std::move(c)), spec_(spec.vru), path_(spec.vru.waypoints) {}

KinematicState VruAgent::state() const {
    const Vec2 p = path_.pointAt(s_);
    const double a = speed_ <= 0.0 && accel_ < 0.0 ? 0.0 : accel_;
    return {p.x, p.y, path_.headingAt(s_), speed_, a};
}

void VruAgent::physics(std::uint64_t nowMs, double dtS) {
    if (nowMs <= spec_.startMs) {
        accel_ = 0.0;
        return;
    }
    const double remaining = path_.length() - s_;
    double desired = halted(nowMs) ? 0.0 : spec_.speed;
    desired = std::min(desired, std::sqrt(2.0 * kVruAccel * std::max(remaining, 0.0)));
    accel_ = std::clamp((desired - speed_) / dtS, -kVruDecel, kVruAccel);
    const auto step = advance(speed_, accel_, dtS);
    s_ = std::min(s_ + step.distance, path_.length());
    speed_ = s_ >= path_.length() ? 0.0 : step.speed;
}

void VruAgent::tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox) {
    const auto now = host.nowMs();
    const auto here = state();
    for (const auto& env : inbox) {
        const VerifyResult verdict = host.verifier().verify(env->msg, env->digest);
        if (verdict != VerifyResult::accept) {
            host.received(core, *env, verdict, false, nullptr);
            continue;
        }
        Payload payload;
        try {
            payload = decode(env->msg.payloadBytes);
        } catch (const std::exception&) {
            host.received(core, *env, verdict, false, nullptr);
            continue;
        }
        const auto* denm = std::get_if<DenmPayload>(&payload);
        if (!denm) {
            host.received(core, *env, verdict, true, nullptr);
            continue;
        }
        const std::string text = describeDenm(*denm);
        const bool fresh = core.seenDenms.insert(env->digest).second;
        if (fresh) {
            core.hmi.push_back({now, text, true});
        }
        host.received(core, *env, verdict, true, fresh ? &text : nullptr);
        if (denm->cause == DenmCause::vruCollision &&
            std::hypot(denm->eventState.x - here.x, denm->eventState.y - here.y) <= kVruWarningRadius) {
            haltedUntil_ = std::max(haltedUntil_, now + kVruHaltMs);
        }
    }
}

}  // namespace sentinel
