#include <algorithm>
#include <cmath>
#include <sstream>

#include "sentinel/agents.hpp"

namespace sentinel {

double comfortStopDecel(double speed, double distance) {
    if (distance <= 0.0) {
        throw InvariantViolation("stopping distance must be positive");
    }
    return speed * speed / (2.0 * distance);
}

std::string describeDenm(const DenmPayload& denm) {
    std::ostringstream out;
    out << "DENM " << toString(denm.cause) << " from " << denm.sender.value;
    if (denm.offender.known()) {
        out << " offender " << denm.offender.value;
    }
    return out.str();
}

Path buildVehiclePath(const LaneSpec& lane, const IntersectionSpec& ix, double* stopS) {
    const auto& c = lane.centerline;
    const Vec2 in = c[1] - c[0];
    const Vec2 out = c[c.size() - 1] - c[c.size() - 2];
    Polyline pts;
    pts.push_back(c.front() - in * (ix.approachLength / in.norm()));
    pts.insert(pts.end(), c.begin(), c.end());
    pts.push_back(c.back() + out * (ix.exitLength / out.norm()));
    if (stopS) {
        // the lead-in is collinear with the first centerline segment, so smoothing leaves it alone
        *stopS = ix.approachLength;
    }
    return Path(chaikin(pts, 4));
}

VehicleAgent::VehicleAgent(AgentCore c, const ActorSpec& spec, const LaneSpec& lane, const Fixture& fixture)
    : core(std::move(c)),
      spec_(spec.vehicle),
      lane_(lane),
      stopBuffer_(fixture.intersection.stopBuffer),
      sensorRng_(fixture.sim.seed, 0x5E5, *core.actorIndex),
      det_(fixture.detection),
      cpmEvery_(fixture.sim.cpmEverySteps),
      crossChecker_(fixture.detection.crossCheck),
      vruMonitor_(fixture.detection.gate, SensorNoise{spec.vehicle.sensor.sigmaPos, spec.vehicle.sensor.sigmaVel},
                  SensorNoise{fixture.camera.sigmaPos, fixture.camera.sigmaVel},
                  fixture.detection.crossCheck.rAssoc) {
    path_ = buildVehiclePath(lane, fixture.intersection, &stopS_);
}

KinematicState VehicleAgent::state() const {
    const Vec2 p = path_.pointAt(s_);
    const double a = speed_ <= 0.0 && accel_ < 0.0 ? 0.0 : accel_;
    return {p.x, p.y, path_.headingAt(s_), speed_, a};
}

bool VehicleAgent::physics(std::uint64_t nowMs, double dtS) {
    if (!spawned_) {
        if (nowMs >= spec_.spawnMs) {
            spawned_ = present_ = true;
            s_ = stopS_ - spec_.startDistance;
            speed_ = spec_.speed;
            accel_ = 0.0;
        }
        return false;
    }
    if (!present_) {
        return false;
    }
    const double prev = s_;
    const auto step = advance(speed_, accel_, dtS);
    s_ += step.distance;
    speed_ = step.speed;
    if (s_ >= path_.length()) {
        present_ = false;
    }
    return prev < stopS_ && s_ >= stopS_;
}

void VehicleAgent::hijack(double approachSpeed, std::uint64_t nowMs) {
    hijacked_ = true;
    approachSpeed_ = approachSpeed;
    hijackMs_ = nowMs;
    fakeProfile_.emplace(path_, s_, speed_, stopS_ - stopBuffer_);
    core.hmiEffective = false;
}

void VehicleAgent::attachCan(std::vector<CanFrame> frames, CanBaseline baseline, const CanIdsConfig& cfg) {
    canFrames_ = std::move(frames);
    canNext_ = 0;
    canDetector_.emplace(std::move(baseline), cfg);
}

FieldOfView VehicleAgent::sensorFov(const KinematicState& at) const {
    return {at.x, at.y, at.heading, spec_.sensor.range, spec_.sensor.halfAngle};
}

std::vector<PerceivedObject> VehicleAgent::localAt(std::uint64_t timeMs) const {
    for (const auto& snap : snapshots_) {
        if (snap.timeMs == timeMs) {
            auto objects = snap.objects;
            PerceivedObject ego;
            ego.objectId = static_cast<std::uint16_t>(*core.actorIndex + 1);
            ego.state = snap.ego;
            ego.classification = ObjectClass::vehicle;
            objects.push_back(ego);
            return objects;
        }
    }
    return {};
}

VehicleAgent::Belief VehicleAgent::believedSignal(const AgentHost& host) const {
    const auto now = host.nowMs();
    const SpatPayload* best = nullptr;
    for (const auto& [sender, spat] : spats_) {
        if (distrustedSpat_.count(sender) || spat.genTime + kSpatFreshMs < now) {
            continue;
        }
        if (!best || spat.genTime > best->genTime) {
            best = &spat;
        }
    }
    std::optional<SignalState> state;
    if (best) {
        for (const auto& ph : best->phases) {
            if (ph.signalGroup == lane_.signalGroup) {
                // past the advertised change the state is unknown
                if (now - best->genTime < ph.timeToChangeMs) {
                    state = ph.state;
                } else {
                    return Belief::caution;
                }
            }
        }
    }
    if (!state) {
        state = host.physicalSignal(lane_.signalGroup).state;
    }
    switch (*state) {
        case SignalState::green: return Belief::go;
        case SignalState::yellow: return Belief::caution;
        default: return Belief::stop;
    }
}

double VehicleAgent::decideAccel(const AgentHost& host) {
    const double dt = host.dtS();
    const double target = hijacked_ ? approachSpeed_ : spec_.targetSpeed;
    double a = std::clamp((target - speed_) / dt, -kComfortDecel, kCruiseAccel);
    auto need = [&](double d) { return d <= 0.05 ? speed_ / dt : speed_ * speed_ / (2.0 * d); };

    if (!hijacked_ && s_ < stopS_) {
        const Belief b = believedSignal(host);
        if (b == Belief::go) {
            stopping_ = false;
        } else {
            const double d = stopS_ - stopBuffer_ - s_;
            if (speed_ <= 0.0 && d < 0.5) {
                a = std::min(a, 0.0);
            } else {
                const double req = need(d);
                const double limit = b == Belief::stop ? kEmergencyDecel : kComfortDecel;
                if (req <= limit) {
                    if (stopping_ || req >= kBrakeTrigger) {
                        stopping_ = true;
                        a = std::min(a, -req);
                    }
                } else if (b == Belief::stop) {
                    stopping_ = true;
                    a = std::min(a, -kEmergencyDecel);
                }
            }
        }
    }

    const PhysicalActor* lead = nullptr;
    for (const auto& p : host.actors()) {
        if (!p.present || p.kind != ActorKind::vehicle || p.lane != lane_.id || p.index == *core.actorIndex ||
            p.pathS <= s_) {
            continue;
        }
        if (!lead || p.pathS < lead->pathS) {
            lead = &p;
        }
    }
    if (lead) {
        const double gap = lead->pathS - s_ - kFollowGap;
        const double vl = lead->state.speed;
        if (gap <= 0.05) {
            a = std::min(a, std::max(-kEmergencyDecel, (std::min(vl, speed_) - speed_) / dt));
        } else if (speed_ > vl) {
            const double req = (speed_ * speed_ - vl * vl) / (2.0 * gap);
            if (req >= 1.0) {
                a = std::min(a, -std::min(req, kEmergencyDecel));
            }
        }
    }
    // never command a speed below zero within the step
    return std::max(a, -std::min(kEmergencyDecel, speed_ / dt));
}

void VehicleAgent::handleDenm(const DenmPayload& denm, const Envelope& env, AgentHost& host, std::uint64_t nowMs) {
    const std::string text = describeDenm(denm);
    const bool fresh = core.seenDenms.insert(env.digest).second;
    if (fresh) {
        core.hmi.push_back({nowMs, text, core.hmiEffective});
    }
    host.received(core, env, VerifyResult::accept, true, fresh ? &text : nullptr);
    if (hijacked_ || !denm.offender.known()) {
        return;
    }
    if (denm.cause == DenmCause::hackedTrafficLight) {
        distrustedSpat_.insert(denm.offender);
    } else if (denm.cause == DenmCause::maliciousCpm) {
        distrustedCpm_.insert(denm.offender);
    }
}

void VehicleAgent::tick(AgentHost& host, const std::vector<EnvelopePtr>& inbox) {
    const auto now = host.nowMs();
    const KinematicState ego = state();
    const FieldOfView fov = sensorFov(ego);
    onboardNow_.clear();
    if (spec_.sensor.enabled) {
        onboardNow_ = senseObjects(host.actors(), fov, spec_.sensor.sigmaPos, spec_.sensor.sigmaVel, sensorRng_,
                                   core.actorIndex);
    }
    snapshots_.push_back({now, ego, fov, onboardNow_});
    while (snapshots_.size() > 20) {
        snapshots_.pop_front();
    }

    std::vector<DetectionReport> reports;
    auto add = [&](std::vector<DetectionReport> rs) {
        for (auto& r : rs) {
            reports.push_back(std::move(r));
        }
    };
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
            DetectionReport r;
            r.detector = DetectorId::plausibility;
            r.anomaly = Anomaly::implausiblePayload;
            r.offender = Offender::station(env->msg.certificate.subject);
            r.evidence = {env->digest};
            r.simTimeMs = now;
            reports.push_back(std::move(r));
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
            }
            advertised[cam->genTime].push_back({cam->sender, cam->state, env->digest});
        } else if (const auto* cpm = std::get_if<CpmPayload>(&payload)) {
            if (auto r = checkPlausibility(*cpm, det_.plausibility, env->digest, now)) {
                host.received(core, *env, verdict, false, nullptr);
                reports.push_back(std::move(*r));
                continue;
            }
            host.received(core, *env, verdict, true, nullptr);
            for (const auto& snap : snapshots_) {
                if (snap.timeMs == cpm->genTime) {
                    add(crossChecker_.checkCpm(*cpm, env->digest, localAt(cpm->genTime), snap.fov, now));
                    break;
                }
            }
            add(vruMonitor_.onCpm(*cpm, env->digest, now));
        } else if (const auto* denm = std::get_if<DenmPayload>(&payload)) {
            handleDenm(*denm, *env, host, now);
        } else if (const auto* spat = std::get_if<SpatPayload>(&payload)) {
            host.received(core, *env, verdict, true, nullptr);
            spats_[spat->sender] = *spat;
        } else {
            host.received(core, *env, verdict, true, nullptr);
        }
    }

    for (const auto& [genTime, group] : advertised) {
        for (const auto& snap : snapshots_) {
            if (snap.timeMs == genTime) {
                add(crossChecker_.checkAdvertised(group, localAt(genTime), snap.fov, now));
                break;
            }
        }
    }
    add(vruMonitor_.onOnboard(now, onboardNow_));

    if (canDetector_) {
        while (canNext_ < canFrames_.size() && canFrames_[canNext_].timestampMs <= static_cast<double>(now)) {
            add(canDetector_->feed(canFrames_[canNext_]));
            ++canNext_;
        }
    }
    if (auto r = onboardMonitor_.observe(compromise_.asserted(now), core.station, now)) {
        reports.push_back(std::move(*r));
    }

    for (auto& r : reports) {
        if ((r.detector == DetectorId::ekfGate || r.detector == DetectorId::crossCheck) &&
            r.offender.kind == Offender::Kind::station) {
            distrustedCpm_.insert(StationId{r.offender.value});
        }
        host.notify(core, std::move(r));
    }

    accel_ = decideAccel(host);

    if (!core.canTransmit()) {
        return;
    }
    KinematicState advertisedState = state();
    if (hijacked_ && fakeProfile_) {
        advertisedState = fakeProfile_->at(static_cast<double>(now - hijackMs_) / 1000.0);
    }
    host.transmit(core, CamPayload{core.station, advertisedState, now});
    if (spec_.emitsCpm && host.step() % std::max<std::uint64_t>(1, cpmEvery_) == 0) {
        CpmPayload cpm{core.station, fov, onboardNow_, now};
        if (cpm.objects.size() > kMaxCpmObjects) {
            cpm.objects.resize(kMaxCpmObjects);
        }
        host.transmit(core, cpm);
    }
}

}  // namespace sentinel
