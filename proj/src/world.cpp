#include "sentinel/world.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace sentinel {

EnvelopePtr makeEnvelope(SignedMessage msg, MessageType type, StationId sender, std::uint64_t genTime) {
    auto env = std::make_shared<Envelope>();
    env->bytes = encodeSigned(msg);
    env->digest = sha256(env->bytes);
    env->msg = std::move(msg);
    env->type = type;
    env->sender = sender;
    env->genTime = genTime;
    return env;
}

Bus::Bus(std::uint64_t seed, double lossProbability, std::uint32_t latencySteps)
    : seed_(seed), loss_(lossProbability), latency_(latencySteps) {}

std::size_t Bus::attach(StationId station, std::initializer_list<MessageType> subscriptions) {
    Endpoint e;
    e.station = station;
    for (auto t : subscriptions) {
        e.mask |= 1U << (static_cast<unsigned>(t) & 31U);
    }
    endpoints_.push_back(e);
    return endpoints_.size() - 1;
}

Bus::Fanout Bus::broadcast(std::uint64_t step, std::size_t senderEndpoint, const EnvelopePtr& msg) {
    Fanout out;
    auto& sender = endpoints_.at(senderEndpoint);
    const std::uint64_t tx = sender.txCounter++;
    const std::uint32_t bit = 1U << (static_cast<unsigned>(msg->type) & 31U);
    for (std::size_t r = 0; r < endpoints_.size(); ++r) {
        if (r == senderEndpoint || (endpoints_[r].mask & bit) == 0) {
            continue;
        }
        const double u = toUnit(hashKey({seed_, 0xB05, step, senderEndpoint, tx, r}));
        if (u < loss_) {
            out.dropped.push_back(r);
            continue;
        }
        const std::uint64_t due = step + 1 + latency_;
        queue_.emplace(due, BusEvent{due, msg, sender.station, r});
        out.queued.push_back(r);
    }
    return out;
}

std::vector<std::vector<EnvelopePtr>> Bus::deliver(std::uint64_t step) {
    std::vector<std::vector<EnvelopePtr>> inboxes(endpoints_.size());
    auto end = queue_.upper_bound(step);
    for (auto it = queue_.begin(); it != end; ++it) {
        inboxes[it->second.receiver].push_back(it->second.msg);
    }
    queue_.erase(queue_.begin(), end);
    for (auto& inbox : inboxes) {
        std::sort(inbox.begin(), inbox.end(), [](const EnvelopePtr& a, const EnvelopePtr& b) {
            return std::tie(a->type, a->sender, a->genTime, a->digest) <
                   std::tie(b->type, b->sender, b->genTime, b->digest);
        });
    }
    return inboxes;
}

SignalProgram::SignalProgram(const IntersectionSpec& spec) : offset_(spec.offsetMs) {
    std::uint64_t t = 0;
    for (const auto& ph : spec.phases) {
        slots_.push_back({t, ph});
        for (auto g : ph.groups) {
            slotOf_[g] = slots_.size() - 1;
        }
        t += std::uint64_t{ph.greenMs} + ph.yellowMs + ph.allRedMs;
    }
    cycle_ = t;
    groups_ = spec.signalGroups;
    std::sort(groups_.begin(), groups_.end());
}

SignalPhase SignalProgram::phaseOf(std::uint8_t group, std::uint64_t timeMs) const {
    auto it = slotOf_.find(group);
    if (it == slotOf_.end() || cycle_ == 0) {
        return {group, SignalState::red, kIndefiniteMs};
    }
    const auto& slot = slots_[it->second];
    const std::uint64_t c = (timeMs + offset_) % cycle_;
    const std::uint64_t greenEnd = slot.start + slot.phase.greenMs;
    const std::uint64_t yellowEnd = greenEnd + slot.phase.yellowMs;
    if (c >= slot.start && c < greenEnd) {
        return {group, SignalState::green, static_cast<std::uint32_t>(greenEnd - c)};
    }
    if (c >= greenEnd && c < yellowEnd) {
        return {group, SignalState::yellow, static_cast<std::uint32_t>(yellowEnd - c)};
    }
    const std::uint64_t untilGreen = c < slot.start ? slot.start - c : cycle_ - c + slot.start;
    return {group, SignalState::red, static_cast<std::uint32_t>(untilGreen)};
}

std::vector<SignalPhase> SignalProgram::phasesAt(std::uint64_t timeMs) const {
    std::vector<SignalPhase> out;
    for (auto g : groups_) {
        out.push_back(phaseOf(g, timeMs));
    }
    return out;
}

TrafficLight::TrafficLight(const IntersectionSpec& spec, LightSpec cfg) : program_(spec), cfg_(cfg) {}

SignalPhase TrafficLight::physical(std::uint8_t group, std::uint64_t timeMs) const {
    if (override_) {
        auto state = *override_ == OverrideTarget::allRed ? SignalState::red : SignalState::redYellowBlinking;
        return {group, state, kIndefiniteMs};
    }
    return program_.phaseOf(group, timeMs);
}

std::vector<SignalPhase> TrafficLight::physicalPhases(std::uint64_t timeMs) const {
    std::vector<SignalPhase> out;
    for (auto g : program_.groups()) {
        out.push_back(physical(g, timeMs));
    }
    return out;
}

std::vector<OverrideResolution> TrafficLight::resolve(Rng& rng) {
    std::vector<OverrideResolution> out;
    for (const auto& req : pending_) {
        bool honored = !hacked_ || rng.bernoulli(cfg_.honorProbability);
        if (honored) {
            // the first delivered request wins; later ones are no-ops
            if (!override_) {
                override_ = req.target;
            }
            out.push_back({req, Outcome::delivered});
        } else {
            out.push_back({req, Outcome::ignored});
        }
    }
    pending_.clear();
    return out;
}

Vec2 velocityOf(const KinematicState& s) { return {s.speed * std::cos(s.heading), s.speed * std::sin(s.heading)}; }

namespace {

constexpr double kFreshConfidence = 0.9;

PerceivedObject noisyObject(const PhysicalActor& a, double sigmaPos, double sigmaVel, Rng& rng) {
    const Vec2 v = velocityOf(a.state);
    const double px = a.state.x + rng.normal(0.0, sigmaPos);
    const double py = a.state.y + rng.normal(0.0, sigmaPos);
    const double vx = v.x + rng.normal(0.0, sigmaVel);
    const double vy = v.y + rng.normal(0.0, sigmaVel);
    PerceivedObject o;
    o.objectId = static_cast<std::uint16_t>(a.index + 1);
    o.state = {px, py, normalizeHeading(std::atan2(vy, vx)), std::hypot(vx, vy), 0.0};
    o.confidence = kFreshConfidence;
    o.classification = a.classification;
    return o;
}

}  // namespace

CameraSensor::CameraSensor(CameraSpec spec, std::uint64_t seed) : spec_(spec), rng_(seed, 0xCA3) {}

std::vector<CameraObservation> CameraSensor::capture(std::span<const PhysicalActor> actors, double dtS) {
    std::vector<CameraObservation> out;
    for (const auto& a : actors) {
        if (!a.present) {
            tracks_.erase(a.index);
            continue;
        }
        const bool visible = spec_.fov.contains(a.state.x, a.state.y);
        const bool detected = visible && rng_.bernoulli(spec_.detectionProbability);
        if (detected) {
            auto o = noisyObject(a, spec_.sigmaPos, spec_.sigmaVel, rng_);
            if (spec_.fov.contains(o.state.x, o.state.y)) {
                tracks_[a.index] = {o, 0};
                out.push_back({o, true, a.index});
                continue;
            }
        }
        auto it = tracks_.find(a.index);
        if (it == tracks_.end()) {
            continue;
        }
        auto& tr = it->second;
        if (tr.coasted >= spec_.coastSteps) {
            tracks_.erase(it);
            continue;
        }
        const Vec2 v = velocityOf(tr.last.state);
        tr.last.state.x += v.x * dtS;
        tr.last.state.y += v.y * dtS;
        ++tr.coasted;
        tr.last.confidence = kFreshConfidence * (spec_.coastSteps + 1 - tr.coasted) / (spec_.coastSteps + 1);
        if (!spec_.fov.contains(tr.last.state.x, tr.last.state.y)) {
            tracks_.erase(it);
            continue;
        }
        out.push_back({tr.last, false, a.index});
    }
    return out;
}

std::vector<PerceivedObject> senseObjects(std::span<const PhysicalActor> actors, const FieldOfView& fov,
                                          double sigmaPos, double sigmaVel, Rng& rng,
                                          std::optional<std::size_t> exclude) {
    std::vector<PerceivedObject> out;
    for (const auto& a : actors) {
        if (!a.present || (exclude && a.index == *exclude) || !fov.contains(a.state.x, a.state.y)) {
            continue;
        }
        auto o = noisyObject(a, sigmaPos, sigmaVel, rng);
        if (fov.contains(o.state.x, o.state.y)) {
            out.push_back(o);
        }
    }
    return out;
}

UwbFix uwbLocate(Vec2 anchor, std::uint32_t tagId, Vec2 truePosition, double sigma, Rng& rng, double range) {
    const double d = (truePosition - anchor).norm();
    if (!(d <= range)) {
        throw OutOfRange("UWB tag " + std::to_string(tagId) + " is " + std::to_string(d) + " m from the anchor");
    }
    UwbFix fix;
    fix.tagId = tagId;
    fix.x = truePosition.x + rng.normal(0.0, sigma);
    fix.y = truePosition.y + rng.normal(0.0, sigma);
    fix.sigma = sigma;
    return fix;
}

}  // namespace sentinel
