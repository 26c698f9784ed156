#include "sentinel/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sentinel {

namespace {

constexpr std::uint32_t kLightStation = 1;
constexpr std::uint32_t kRsuStation = 2;
constexpr std::uint32_t kPseudonymCaSubject = 0xFFFF0001U;

std::string hex(const Digest& d) { return toHex(d); }

OrderedJson stateJson(const KinematicState& s) {
    return OrderedJson{{"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"speed", s.speed}, {"accel", s.accel}};
}

OrderedJson offenderJson(const Offender& o) {
    switch (o.kind) {
        case Offender::Kind::station: return OrderedJson{{"station", o.value}};
        case Offender::Kind::canId: return OrderedJson{{"can_id", o.value}};
        case Offender::Kind::none: break;
    }
    return nullptr;
}

std::uint64_t genTimeOf(const Payload& p) {
    return std::visit(
        [](const auto& v) -> std::uint64_t {
            if constexpr (requires { v.genTime; }) {
                return v.genTime;
            } else {
                return 0;
            }
        },
        p);
}

Bytes trackBytes(const std::vector<TrackRef>& tracks) {
    Bytes out;
    for (const auto& t : tracks) {
        out.push_back(static_cast<std::uint8_t>(t.source));
        for (int i = 0; i < 4; ++i) {
            out.push_back(static_cast<std::uint8_t>(t.subject >> (8 * i)));
        }
    }
    return out;
}

}  // namespace

Simulation::Simulation(Fixture fixture)
    : fixture_((validate(fixture), std::move(fixture))),
      verifier_(PublicKey{}),
      bus_(fixture_.sim.seed, fixture_.sim.lossProbability, fixture_.sim.latencySteps),
      light_(fixture_.intersection, fixture_.light),
      camera_(fixture_.camera, fixture_.sim.seed),
      uwbRng_(fixture_.sim.seed, 0x0B1),
      lightRng_(fixture_.sim.seed, 0x119) {
    const auto seed = fixture_.sim.seed;
    const auto& f = fixture_;

    // station ids: explicit ones win, the rest are assigned around them
    std::set<std::uint32_t> used;
    for (const auto& a : f.actors) {
        if (a.station != 0) {
            used.insert(a.station);
        }
    }
    auto claim = [&](std::uint32_t wanted, std::uint32_t fallback) {
        if (wanted != 0) {
            used.insert(wanted);
            return wanted;
        }
        while (used.count(fallback)) {
            fallback += 1000;
        }
        used.insert(fallback);
        return fallback;
    };
    const StationId lightStation{claim(f.light.station, kLightStation)};
    const StationId rsuStation{claim(f.rsu.station, kRsuStation)};
    std::vector<StationId> actorStations;
    for (std::size_t i = 0; i < f.actors.size(); ++i) {
        actorStations.push_back(StationId{f.actors[i].station != 0 ? f.actors[i].station
                                                                   : claim(0, static_cast<std::uint32_t>(10 + i))});
    }

    root_.emplace(KeyPair::derive(seed, "root-ca"));
    const auto pcaKeys = KeyPair::derive(seed, "pseudonym-ca");
    const auto pcaCert = root_->issue(StationId{kPseudonymCaSubject}, pcaKeys.publicKey(), PermissionSet::all());
    pseudonymCa_.emplace(pcaKeys, pcaCert);
    verifier_ = Verifier(root_->publicKey());

    auto makeCore = [&](const std::string& name, std::optional<std::size_t> index, StationId station, AgentRole role,
                        PermissionSet perms, std::initializer_list<MessageType> subs) {
        AgentCore core;
        core.name = name;
        core.actorIndex = index;
        core.station = station;
        core.role = role;
        core.endpoint = bus_.attach(station, subs);
        auto keys = KeyPair::derive(seed, "station-" + std::to_string(station.value));
        auto cert = pseudonymCa_->issue(station, keys.publicKey(), perms);
        core.hsm.emplace(keys, cert, pcaCert);
        return core;
    };

    lightCore_ = makeCore("light", std::nullopt, lightStation, AgentRole::rsu,
                          {Permission::sendSpat, Permission::sendMap}, {});

    const auto map = mapOf(f.intersection, lightStation);
    conflicts_ = buildConflictMatrix(map, centerlinesOf(f.intersection), f.intersection.signalGroups);

    rsu_.emplace(makeCore("rsu", std::nullopt, rsuStation, AgentRole::rsu,
                          {Permission::sendCam, Permission::sendCpm, Permission::sendDenm, Permission::sendMap},
                          {MessageType::cam, MessageType::cpm, MessageType::denm}),
                 f, conflicts_);
    tickOrder_.push_back({rsuStation, TickEntry::Kind::rsu, 0});

    for (std::size_t i = 0; i < f.actors.size(); ++i) {
        const auto& a = f.actors[i];
        if (a.kind == ActorKind::vehicle) {
            const LaneSpec* lane = nullptr;
            for (const auto& l : f.intersection.lanes) {
                if (l.id == a.vehicle.lane) {
                    lane = &l;
                }
            }
            auto core = makeCore(a.name, i, actorStations[i], AgentRole::vehicle,
                                 {Permission::sendCam, Permission::sendCpm, Permission::sendDenm},
                                 {MessageType::cam, MessageType::cpm, MessageType::denm, MessageType::spat,
                                  MessageType::map});
            vehicles_.emplace_back(std::move(core), a, *lane, f);
            actorSlots_.emplace_back(ActorKind::vehicle, vehicles_.size() - 1);
            tickOrder_.push_back({actorStations[i], TickEntry::Kind::vehicle, vehicles_.size() - 1});
        } else {
            auto core = makeCore(a.name, i, actorStations[i], AgentRole::vehicle, {Permission::sendDenm},
                                 {MessageType::denm});
            vrus_.emplace_back(std::move(core), a);
            actorSlots_.emplace_back(ActorKind::vru, vrus_.size() - 1);
            tickOrder_.push_back({actorStations[i], TickEntry::Kind::vru, vrus_.size() - 1});
        }
    }
    // every receiver judges a CPM stream against the sender's own sensor noise
    for (auto& v : vehicles_) {
        v.vruMonitor().setSenderNoise(rsu_->core.station, {f.camera.sigmaPos, f.camera.sigmaVel});
        for (const auto& other : vehicles_) {
            if (other.spec().emitsCpm) {
                v.vruMonitor().setSenderNoise(other.core.station,
                                              {other.spec().sensor.sigmaPos, other.spec().sensor.sigmaVel});
            }
        }
    }
    std::sort(tickOrder_.begin(), tickOrder_.end(),
              [](const TickEntry& a, const TickEntry& b) { return a.station < b.station; });

    // in-vehicle CAN traffic; the baseline comes from a separate attack-free capture
    const auto& at = f.attack;
    for (auto& v : vehicles_) {
        const auto idx = *v.core.actorIndex;
        if (!v.spec().canBus) {
            continue;
        }
        auto frames = generateTraffic(f.can, static_cast<double>(f.sim.durationMs), hashKey({seed, 0xCA9, idx}));
        const auto training = generateTraffic(f.can, f.canTrainingMs, hashKey({seed, 0x7A1, idx}));
        auto baseline = canLearnBaseline(training, f.detection.can);
        if (f.sim.scenario == ScenarioKind::s5 && v.core.name == at.compromisedVehicle &&
            at.onboardMode != OnboardAttackMode::onboardCompromise) {
            CanAttackParams p;
            p.mode = at.onboardMode;
            p.targetId = at.canTargetId;
            p.rateMultiplier = at.rateMultiplier.value_or(at.onboardMode == OnboardAttackMode::dosFlood ? 10.0 : 1.0);
            p.onsetMs = static_cast<double>(at.onsetMs);
            p.endMs = static_cast<double>(f.sim.durationMs);
            frames = injectCanAttack(std::move(frames), p, f.can, seed);
        }
        v.attachCan(std::move(frames), std::move(baseline), f.detection.can);
    }
    if (f.sim.scenario == ScenarioKind::s5 && at.onboardMode == OnboardAttackMode::onboardCompromise) {
        for (auto& v : vehicles_) {
            if (v.core.name == at.compromisedVehicle) {
                v.setCompromiseSignal(injectOnboardCompromise(at.onsetMs));
            }
        }
    }

    writeHeader();
}

std::optional<std::uint64_t> Simulation::onsetStep() const {
    if (fixture_.sim.scenario == ScenarioKind::clean) {
        return std::nullopt;
    }
    return fixture_.attack.onsetMs / fixture_.sim.stepMs;
}

StationId Simulation::stationOf(const std::string& actorName) const {
    for (const auto& v : vehicles_) {
        if (v.core.name == actorName) {
            return v.core.station;
        }
    }
    for (const auto& u : vrus_) {
        if (u.core.name == actorName) {
            return u.core.station;
        }
    }
    if (actorName == "rsu") {
        return rsu_->core.station;
    }
    if (actorName == "light") {
        return lightCore_.station;
    }
    return {};
}

void Simulation::writeHeader() {
    const auto& f = fixture_;
    OrderedJson h;
    h["schema"] = kTraceSchema;
    h["fixture"] = f.name;
    h["scenario"] = std::string(toString(f.sim.scenario));
    h["seed"] = f.sim.seed;
    h["step_ms"] = f.sim.stepMs;
    h["duration_ms"] = f.sim.durationMs;
    if (auto onset = onsetStep()) {
        h["onset_step"] = *onset;
    } else {
        h["onset_step"] = nullptr;
    }
    OrderedJson designated = OrderedJson::array();
    for (auto d : designatedDetectors(f.sim.scenario)) {
        designated.push_back(std::string(toString(d)));
    }
    h["designated"] = designated;
    OrderedJson actors = OrderedJson::array();
    actors.push_back({{"name", "light"}, {"station", lightCore_.station.value}, {"kind", "light"}});
    actors.push_back({{"name", "rsu"}, {"station", rsu_->core.station.value}, {"kind", "rsu"}});
    for (std::size_t i = 0; i < f.actors.size(); ++i) {
        const auto [kind, pos] = actorSlots_[i];
        const StationId st = kind == ActorKind::vehicle ? vehicles_[pos].core.station : vrus_[pos].core.station;
        actors.push_back({{"name", f.actors[i].name},
                          {"station", st.value},
                          {"kind", kind == ActorKind::vehicle ? "vehicle" : "vru"}});
    }
    h["actors"] = actors;
    trace_.header(h);
}

bool Simulation::attackActive() const {
    return fixture_.sim.scenario != ScenarioKind::clean && nowMs() >= fixture_.attack.onsetMs;
}

void Simulation::refreshActors() {
    actors_.clear();
    for (std::size_t i = 0; i < actorSlots_.size(); ++i) {
        const auto [kind, pos] = actorSlots_[i];
        PhysicalActor p;
        p.index = i;
        p.kind = kind;
        if (kind == ActorKind::vehicle) {
            const auto& v = vehicles_[pos];
            p.classification = ObjectClass::vehicle;
            p.present = v.present();
            p.state = v.state();
            p.lane = v.laneId();
            p.pathS = v.pathS();
        } else {
            const auto& u = vrus_[pos];
            p.classification = u.spec().classification;
            p.present = true;
            p.state = u.state();
        }
        actors_.push_back(p);
    }
}

void Simulation::startAttacks() {
    const auto& at = fixture_.attack;
    const auto now = nowMs();
    switch (fixture_.sim.scenario) {
        case ScenarioKind::s1: {
            MaliciousCpmParams p;
            p.mode = at.cpmMode;
            p.falseSpeed = at.falseSpeed;
            for (std::size_t i = 0; i < fixture_.actors.size(); ++i) {
                if (fixture_.actors[i].name == at.target) {
                    p.targetObjectId = static_cast<std::uint16_t>(i + 1);
                }
            }
            if (at.cpmMode == CpmAttackMode::ghost) {
                for (const auto& v : vehicles_) {
                    if (v.core.name == at.victim && v.present()) {
                        auto s = v.state();
                        s.x += at.ghostAhead * std::cos(s.heading);
                        s.y += at.ghostAhead * std::sin(s.heading);
                        s.speed = 0.0;
                        s.accel = 0.0;
                        p.ghost = s;
                    }
                }
            }
            rsu_->setCpmAttack(p);
            break;
        }
        case ScenarioKind::s2:
        case ScenarioKind::s4:
            if (!hijackDone_) {
                for (auto& v : vehicles_) {
                    if (v.core.name == at.hackedVehicle && v.present()) {
                        v.hijack(at.approachSpeed.value_or(v.spec().targetSpeed), now);
                        hijackDone_ = true;
                    }
                }
            }
            break;
        case ScenarioKind::s3:
            light_.setHacked(true);
            break;
        case ScenarioKind::s5:
        case ScenarioKind::clean:
            break;
    }
}

void Simulation::lightTick() {
    const auto k = step_;
    const auto now = nowMs();
    for (const auto& res : light_.resolve(lightRng_)) {
        auto e = trace_.event("mitigation", k, now);
        e["report_id"] = res.request.reportId;
        e["station"] = res.request.requester.value;
        e["action"] = std::string(toString(ActionKind::requestLightOverride));
        e["outcome"] = std::string(toString(res.outcome));
        e["target"] = std::string(toString(res.request.target));
        e["issued_step"] = res.request.issuedStep;
        trace_.append(e);
    }

    SpatPayload spat{lightCore_.station, light_.physicalPhases(now), now};
    if (light_.hacked()) {
        spat = injectHackedSpat(spat, fixture_.attack.spatMode, fixture_.attack.pairA, fixture_.attack.pairB);
    }
    std::vector<SignalState> states;
    for (const auto& ph : spat.phases) {
        states.push_back(ph.state);
    }
    const bool changed = states != lastBroadcast_;
    lastBroadcast_ = states;
    spatLink_.clear();
    if (k % fixture_.sim.spatEverySteps == 0 || changed) {
        if (auto env = transmit(lightCore_, spat)) {
            spatLink_.push_back(env);
        }
    }
    if (k % (std::uint64_t{fixture_.sim.spatEverySteps} * 10) == 0) {
        transmit(lightCore_, mapOf(fixture_.intersection, lightCore_.station));
    }
}

void Simulation::repeatDenms(AgentCore& core) {
    const auto k = step_;
    for (auto& r : core.repeats) {
        if (r.nextStep == k && nowMs() < r.untilMs) {
            rebroadcast(core, r.env);
            r.nextStep += fixture_.sim.denmRepeatSteps;
        }
    }
    std::erase_if(core.repeats, [&](const AgentCore::Repeat& r) { return r.nextStep <= k || nowMs() >= r.untilMs; });
}

void Simulation::advance() {
    if (finished()) {
        return;
    }
    const auto k = step_;
    const auto now = nowMs();
    const double dt = dtS();

    // 1. physics
    std::vector<std::pair<StationId, SignalState>> crossings;
    const std::uint64_t before = now >= fixture_.sim.stepMs ? now - fixture_.sim.stepMs : 0;
    for (auto& v : vehicles_) {
        if (v.physics(now, dt)) {
            crossings.emplace_back(v.core.station, light_.physical(v.signalGroup(), before).state);
        }
    }
    for (auto& u : vrus_) {
        u.physics(now, dt);
    }
    refreshActors();
    if (attackActive()) {
        startAttacks();
    }

    // 2. delivery
    auto inboxes = bus_.deliver(k);

    // 3. traffic light
    lightTick();

    // 4-5. roadside sensing
    const auto observations = camera_.capture(actors_, dt);
    std::vector<UwbFix> fixes;
    for (const auto& u : vrus_) {
        if (!u.spec().tag) {
            continue;
        }
        const auto s = u.state();
        try {
            fixes.push_back(uwbLocate(fixture_.rsu.anchor, u.tagId(), {s.x, s.y}, fixture_.rsu.uwbSigma, uwbRng_,
                                      fixture_.rsu.uwbRange));
        } catch (const OutOfRange&) {
        }
    }

    // 6. agents
    for (const auto& entry : tickOrder_) {
        switch (entry.kind) {
            case TickEntry::Kind::vehicle: {
                auto& v = vehicles_[entry.index];
                if (v.present()) {
                    v.tick(*this, inboxes[v.core.endpoint]);
                }
                repeatDenms(v.core);
                break;
            }
            case TickEntry::Kind::rsu:
                rsu_->tick(*this, inboxes[rsu_->core.endpoint], spatLink_, observations, fixes);
                repeatDenms(rsu_->core);
                break;
            case TickEntry::Kind::vru: {
                auto& u = vrus_[entry.index];
                u.tick(*this, inboxes[u.core.endpoint]);
                break;
            }
        }
    }

    // 7. state
    writeState(crossings);
    ++step_;
}

void Simulation::run() {
    while (!finished()) {
        advance();
    }
}

void Simulation::writeState(const std::vector<std::pair<StationId, SignalState>>& crossings) {
    auto e = trace_.event("state", step_, nowMs());
    OrderedJson actors = OrderedJson::array();
    for (const auto& p : actors_) {
        const auto [kind, pos] = actorSlots_[p.index];
        const auto& core = kind == ActorKind::vehicle ? vehicles_[pos].core : vrus_[pos].core;
        OrderedJson a{{"station", core.station.value}, {"present", p.present}};
        if (p.present) {
            a["x"] = p.state.x;
            a["y"] = p.state.y;
            a["speed"] = p.state.speed;
        }
        if (kind == ActorKind::vehicle && vehicles_[pos].hijacked()) {
            a["hijacked"] = true;
        }
        actors.push_back(a);
    }
    e["actors"] = actors;
    OrderedJson signals = OrderedJson::object();
    for (const auto& ph : light_.physicalPhases(nowMs())) {
        signals[std::to_string(ph.signalGroup)] = std::string(toString(ph.state));
    }
    e["signals"] = signals;
    if (!crossings.empty()) {
        OrderedJson c = OrderedJson::array();
        for (const auto& [station, st] : crossings) {
            c.push_back({{"station", station.value}, {"signal", std::string(toString(st))}});
        }
        e["stop_line"] = c;
    }
    trace_.append(e);
}

void Simulation::received(const AgentCore& receiver, const Envelope& env, VerifyResult verdict, bool accepted,
                          const std::string* hmi) {
    auto e = trace_.event("rx", step_, nowMs());
    e["station"] = receiver.station.value;
    e["sender"] = env.sender.value;
    e["type"] = std::string(toString(env.type));
    e["digest"] = hex(env.digest);
    e["verify"] = std::string(toString(verdict));
    e["accepted"] = accepted;
    if (hmi) {
        e["hmi"] = *hmi;
    }
    trace_.append(e);
}

EnvelopePtr Simulation::transmit(AgentCore& from, const Payload& payload) {
    if (!from.canTransmit()) {
        return nullptr;
    }
    const auto bytes = encode(payload);
    auto env = makeEnvelope(from.hsm->sign(bytes), typeOf(payload), from.station, genTimeOf(payload));
    rebroadcast(from, env);
    return env;
}

void Simulation::rebroadcast(AgentCore& from, const EnvelopePtr& env) {
    if (!from.canTransmit()) {
        return;
    }
    const auto fan = bus_.broadcast(step_, from.endpoint, env);
    auto e = trace_.event("tx", step_, nowMs());
    e["station"] = from.station.value;
    e["origin"] = env->sender.value;
    e["type"] = std::string(toString(env->type));
    e["gen_time"] = env->genTime;
    e["digest"] = hex(env->digest);
    e["envelope"] = toHex(env->bytes);
    trace_.append(e);
    for (auto r : fan.dropped) {
        auto d = trace_.event("drop", step_, nowMs());
        d["station"] = bus_.station(r).value;
        d["sender"] = from.station.value;
        d["type"] = std::string(toString(env->type));
        d["digest"] = hex(env->digest);
        trace_.append(d);
    }
}

KinematicState Simulation::stateOf(const AgentCore& core) const {
    if (core.actorIndex) {
        const auto [kind, pos] = actorSlots_[*core.actorIndex];
        return kind == ActorKind::vehicle ? vehicles_[pos].state() : vrus_[pos].state();
    }
    return rsu_->state();
}

void Simulation::executeDenm(AgentCore& from, const DetectionReport& report, DenmCause cause,
                             std::uint64_t reportId, ActionKind kind) {
    DenmPayload d;
    d.sender = from.station;
    d.cause = cause;
    d.eventState = report.location.value_or(stateOf(from));
    if (report.offender.kind == Offender::Kind::station) {
        d.offender = StationId{report.offender.value};
    } else if (report.offender.kind == Offender::Kind::canId) {
        d.offender = from.station;
    }
    d.evidenceDigest =
        report.evidence.empty() ? evidenceDigest("tracks", trackBytes(report.tracks)) : report.evidence.front();
    d.genTime = nowMs();

    auto e = trace_.event("mitigation", step_, nowMs());
    e["report_id"] = reportId;
    e["station"] = from.station.value;
    e["action"] = std::string(toString(kind));
    e["cause"] = std::string(toString(cause));
    EnvelopePtr env;
    try {
        env = transmit(from, d);
    } catch (const InvariantViolation&) {
        env = nullptr;
    }
    if (env) {
        from.repeats.push_back({env, step_ + fixture_.sim.denmRepeatSteps, nowMs() + fixture_.sim.denmLifetimeMs});
        e["outcome"] = std::string(toString(Outcome::delivered));
        e["denm_digest"] = hex(env->digest);
        e["evidence"] = hex(d.evidenceDigest);
    } else {
        e["outcome"] = std::string(toString(Outcome::ignored));
        e["reason"] = "cannot sign";
    }
    trace_.append(e);
}

void Simulation::notify(AgentCore& from, DetectionReport report) {
    const auto id = ++reportSeq_;
    const auto now = nowMs();
    {
        auto e = trace_.event("detection", step_, now);
        e["report_id"] = id;
        e["station"] = from.station.value;
        e["role"] = std::string(toString(from.role));
        e["detector"] = std::string(toString(report.detector));
        e["anomaly"] = std::string(toString(report.anomaly));
        e["offender"] = offenderJson(report.offender);
        OrderedJson ev = OrderedJson::array();
        for (const auto& d : report.evidence) {
            ev.push_back(hex(d));
        }
        e["evidence"] = ev;
        if (report.source) {
            e["source"] = std::string(toString(*report.source));
        }
        if (!report.tracks.empty()) {
            OrderedJson tr = OrderedJson::array();
            for (const auto& t : report.tracks) {
                tr.push_back({{"source", std::string(toString(t.source))}, {"subject", t.subject}});
            }
            e["tracks"] = tr;
        }
        if (report.ttcS) {
            e["ttc_s"] = *report.ttcS;
        }
        if (report.location) {
            e["location"] = stateJson(*report.location);
        }
        e["score"] = report.score;
        e["sim_time_ms"] = report.simTimeMs;
        trace_.append(e);
    }

    for (const auto& action : route(report, fixture_.policy, from.role, now)) {
        switch (action.kind) {
            case ActionKind::broadcastDenm:
                executeDenm(from, report, action.cause.value_or(defaultCause(report.detector, report.anomaly)), id,
                            action.kind);
                break;
            case ActionKind::requestLightOverride: {
                const auto target = action.target.value_or(OverrideTarget::redYellowBlinking);
                light_.request({target, id, from.station, step_});
                auto e = trace_.event("mitigation", step_, now);
                e["report_id"] = id;
                e["station"] = from.station.value;
                e["action"] = std::string(toString(action.kind));
                e["outcome"] = std::string(toString(Outcome::pending));
                e["target"] = std::string(toString(target));
                trace_.append(e);
                break;
            }
            case ActionKind::hmiNotify:
                if (from.role == AgentRole::rsu && report.anomaly == Anomaly::imminentCollision) {
                    // the VRU's handheld is reached through a DENM
                    executeDenm(from, report, DenmCause::vruCollision, id, action.kind);
                } else {
                    std::string text = std::string(toString(report.detector)) + ": " +
                                       std::string(toString(report.anomaly));
                    from.hmi.push_back({now, text, from.hmiEffective});
                    auto e = trace_.event("mitigation", step_, now);
                    e["report_id"] = id;
                    e["station"] = from.station.value;
                    e["action"] = std::string(toString(action.kind));
                    e["outcome"] = std::string(toString(Outcome::delivered));
                    e["text"] = text;
                    e["effective"] = from.hmiEffective;
                    trace_.append(e);
                }
                break;
            case ActionKind::purgeOwnKeys: {
                const bool had = from.canTransmit();
                if (from.hsm) {
                    from.hsm->purgeKeys();
                }
                from.repeats.clear();
                auto e = trace_.event("mitigation", step_, now);
                e["report_id"] = id;
                e["station"] = from.station.value;
                e["action"] = std::string(toString(action.kind));
                e["outcome"] = std::string(toString(Outcome::delivered));
                if (!had) {
                    e["reason"] = "already purged";
                }
                trace_.append(e);
                break;
            }
        }
    }
}

}  // namespace sentinel
