#include <algorithm>
#include <cmath>

#include "sentinel/agents.hpp"

namespace sentinel {

namespace {

DetectionReport undecodable(const Envelope& env, std::uint64_t nowMs) {
    DetectionReport r;
    r.detector = DetectorId::plausibility;
    r.anomaly = Anomaly::implausiblePayload;
    r.offender = Offender::station(env.msg.certificate.subject);
    r.evidence = {env.digest};
    r.simTimeMs = nowMs;
    return r;
}

KinematicState stateFromFilter(const EkfState& f) {
    const double vx = f.x(2);
    const double vy = f.x(3);
    return {f.x(0), f.x(1), normalizeHeading(std::atan2(vy, vx)), std::hypot(vx, vy), 0.0};
}

}  // namespace

RsuAgent::RsuAgent(AgentCore c, const Fixture& fixture, ConflictMatrix conflicts)
    : core(std::move(c)),
      spec_(fixture.rsu),
      camera_(fixture.camera),
      det_(fixture.detection),
      conflicts_(std::move(conflicts)),
      cpmEverySteps_(fixture.sim.cpmEverySteps),
      crossChecker_(fixture.detection.crossCheck),
      camPerception_(fixture.detection.camPerception),
      collision_(fixture.detection.collision) {}

std::vector<PerceivedObject> RsuAgent::localAt(std::uint64_t timeMs) const {
    for (const auto& [t, objects] : cameraHistory_) {
        if (t == timeMs) {
            return objects;
        }
    }
    return {};
}

void RsuAgent::updateCamera(std::uint64_t nowMs, const std::vector<CameraObservation>& camera) {
    std::vector<PerceivedObject> objects;
    for (const auto& obs : camera) {
        objects.push_back(obs.object);
        if (obs.object.classification == ObjectClass::vehicle) {
            auto& track = perceivedVehicles_.try_emplace(obs.object.objectId, obs.object.objectId, TrackSource::cpm)
                              .first->second;
            track.push(nowMs, obs.object.state, obs.measured);
        }
    }
    std::erase_if(perceivedVehicles_, [&](const auto& kv) { return kv.second.latest().timeMs < nowMs; });
    cameraHistory_.emplace_back(nowMs, std::move(objects));
    while (cameraHistory_.size() > 20) {
        cameraHistory_.pop_front();
    }
}

void RsuAgent::updateUwb(std::uint64_t nowMs, const std::vector<UwbFix>& uwb) {
    const double q = spec_.uwbProcessNoise;
    for (const auto& fix : uwb) {
        const Eigen::Vector2d z(fix.x, fix.y);
        const double var = std::max(fix.sigma * fix.sigma, 1e-6);
        auto it = uwbFilters_.find(fix.tagId);
        if (it == uwbFilters_.end()) {
            it = uwbFilters_.emplace(fix.tagId, ekfInit(z, Eigen::Vector2d::Zero(), var, 4.0, nowMs)).first;
        } else {
            const auto predicted = ekfPredict(it->second, nowMs, q);
            it->second = ekfUpdate(predicted, z, Eigen::Matrix2d::Identity() * var).state;
        }
        auto& track = uwbTracks_.try_emplace(fix.tagId, fix.tagId, TrackSource::uwb).first->second;
        track.push(nowMs, stateFromFilter(it->second));
    }
    std::erase_if(uwbTracks_, [&](const auto& kv) { return kv.second.latest().timeMs < nowMs; });
    std::erase_if(uwbFilters_, [&](const auto& kv) { return !uwbTracks_.count(kv.first); });
}

void RsuAgent::tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox, const std::vector<EnvelopePtr>& spatLink,
                    const std::vector<CameraObservation>& camera, const std::vector<UwbFix>& uwb) {
    const auto now = host.nowMs();
    updateCamera(now, camera);
    updateUwb(now, uwb);

    std::vector<DetectionReport> reports;
    auto add = [&](std::vector<DetectionReport> rs) {
        for (auto& r : rs) {
            reports.push_back(std::move(r));
        }
    };

    for (const auto& env : spatLink) {
        const VerifyResult verdict = host.verifier().verify(env->msg, env->digest);
        if (verdict != VerifyResult::accept) {
            host.received(core, *env, verdict, false, nullptr);
            if (auto r = checkSecurity(env->msg, host.verifier(), env->digest, now)) {
                reports.push_back(std::move(*r));
            }
            continue;
        }
        try {
            const auto spat = std::get<SpatPayload>(decode(env->msg.payloadBytes));
            host.received(core, *env, verdict, true, nullptr);
            if (auto r = checkSpatConflicts(spat, conflicts_, &spatHistory_, env->digest, now)) {
                reports.push_back(std::move(*r));
            }
            spatHistory_.record(spat);
        } catch (const std::exception&) {
            host.received(core, *env, verdict, false, nullptr);
            reports.push_back(undecodable(*env, now));
        }
    }

    std::map<std::uint64_t, std::vector<Advertised>> advertised;
    for (const auto& env : inbox) {
        const VerifyResult verdict = host.verifier().verify(env->msg, env->digest);
        if (verdict != VerifyResult::accept) {
            host.received(core, *env, verdict, false, nullptr);
            if (auto r = checkSecurity(env->msg, host.verifier(), env->digest, now)) {
                reports.push_back(std::move(*r));
            }
            continue;
        }
        Payload payload;
        try {
            payload = decode(env->msg.payloadBytes);
        } catch (const std::exception&) {
            host.received(core, *env, verdict, false, nullptr);
            reports.push_back(undecodable(*env, now));
            continue;
        }
        if (const auto* cam = std::get_if<CamPayload>(&payload)) {
            if (auto r = checkPlausibility(*cam, det_.plausibility, env->digest, now)) {
                host.received(core, *env, verdict, false, nullptr);
                reports.push_back(std::move(*r));
                continue;
            }
            host.received(core, *env, verdict, true, nullptr);
            auto& track = camTracks_.try_emplace(cam->sender, cam->sender.value, TrackSource::cam).first->second;
            if (!track.empty()) {
                if (auto r = checkConsistency(track, *cam, det_.consistency, env->digest, now)) {
                    reports.push_back(std::move(*r));
                }
            }
            if (track.empty() || cam->genTime > track.latest().timeMs) {
                track.push(cam->genTime, cam->state);
                if (auto r = camPerception_.observe(cam->sender, track, perceivedVehicles_, env->digest, now)) {
                    reports.push_back(std::move(*r));
                }
            }
            advertised[cam->genTime].push_back({cam->sender, cam->state, env->digest});
        } else if (const auto* cpm = std::get_if<CpmPayload>(&payload)) {
            if (auto r = checkPlausibility(*cpm, det_.plausibility, env->digest, now)) {
                host.received(core, *env, verdict, false, nullptr);
                reports.push_back(std::move(*r));
                continue;
            }
            host.received(core, *env, verdict, true, nullptr);
            if (std::any_of(cameraHistory_.begin(), cameraHistory_.end(),
                            [&](const auto& h) { return h.first == cpm->genTime; })) {
                add(crossChecker_.checkCpm(*cpm, env->digest, localAt(cpm->genTime), camera_.fov, now));
            }
        } else if (std::holds_alternative<DenmPayload>(payload)) {
            host.received(core, *env, verdict, true, nullptr);
            // forward each foreign DENM once
            if (core.seenDenms.insert(env->digest).second && env->sender != core.station && core.canTransmit()) {
                host.rebroadcast(core, env);
            }
        } else {
            host.received(core, *env, verdict, true, nullptr);
        }
    }

    for (const auto& [genTime, group] : advertised) {
        if (std::any_of(cameraHistory_.begin(), cameraHistory_.end(),
                        [&](const auto& h) { return h.first == genTime; })) {
            add(crossChecker_.checkAdvertised(group, localAt(genTime), camera_.fov, now));
        }
    }

    for (auto& r : collision_.observe(uwbTracks_, perceivedVehicles_, now)) {
        const std::uint32_t threat = r.tracks.at(1).subject;
        for (const auto& [sender, track] : camTracks_) {
            if (camPerception_.associated(sender) == threat) {
                r.offender = Offender::station(sender);
            }
        }
        reports.push_back(std::move(r));
    }

    for (auto& r : reports) {
        host.notify(core, std::move(r));
    }

    if (core.canTransmit() && host.step() % std::max<std::uint32_t>(1, cpmEverySteps_) == 0) {
        auto objects = cameraHistory_.back().second;
        if (cpmAttack_) {
            objects = injectMaliciousCpm(std::move(objects), *cpmAttack_, camera_.fov);
        }
        if (objects.size() > kMaxCpmObjects) {
            objects.resize(kMaxCpmObjects);
        }
        host.transmit(core, CpmPayload{core.station, camera_.fov, std::move(objects), now});
    }
}

}  // namespace sentinel
