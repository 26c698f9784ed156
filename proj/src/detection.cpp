#include "sentinel/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sentinel/wire.hpp"

namespace sentinel {

namespace {

constexpr Anomaly kSecurity[] = {Anomaly::badSignature};
constexpr Anomaly kPlausibility[] = {Anomaly::implausiblePayload};
constexpr Anomaly kConsistency[] = {Anomaly::inconsistentStream};
constexpr Anomaly kCross[] = {Anomaly::positionUsurpation, Anomaly::ghost, Anomaly::hijackedVehicle};
constexpr Anomaly kEkf[] = {Anomaly::inconsistentStream};
constexpr Anomaly kSpat[] = {Anomaly::conflictingGreens, Anomaly::implausiblePayload};
constexpr Anomaly kCamPerception[] = {Anomaly::stopLie};
constexpr Anomaly kCollision[] = {Anomaly::imminentCollision};
constexpr Anomaly kCan[] = {Anomaly::canDos, Anomaly::canInjection};
constexpr Anomaly kOnboard[] = {Anomaly::onboardCompromise};

constexpr Anomaly kAllAnomalies[] = {
    Anomaly::badSignature,      Anomaly::implausiblePayload, Anomaly::inconsistentStream,
    Anomaly::positionUsurpation, Anomaly::ghost,             Anomaly::hijackedVehicle,
    Anomaly::conflictingGreens, Anomaly::stopLie,            Anomaly::imminentCollision,
    Anomaly::canDos,            Anomaly::canInjection,       Anomaly::onboardCompromise,
};

Vec2 pos(const KinematicState& s) { return {s.x, s.y}; }

Vec2 velocity(const KinematicState& s) { return {s.speed * std::cos(s.heading), s.speed * std::sin(s.heading)}; }

DetectionReport makeReport(DetectorId detector, Anomaly anomaly, Offender offender, std::vector<Digest> evidence,
                           std::uint64_t nowMs) {
    DetectionReport r;
    r.detector = detector;
    r.anomaly = anomaly;
    r.offender = offender;
    r.evidence = std::move(evidence);
    r.simTimeMs = nowMs;
    return r;
}

bool plausibleState(const KinematicState& s, const PlausibilityConfig& cfg) {
    return s.speed <= cfg.maxSpeed && std::abs(s.accel) <= cfg.maxAbsAccel && cfg.region.contains(s.x, s.y);
}

Bytes encodeState(const KinematicState& s) {
    wire::Writer w;
    w.f64(s.x);
    w.f64(s.y);
    w.f64(s.heading);
    w.f64(s.speed);
    w.f64(s.accel);
    return w.take();
}

Eigen::Matrix2d isotropic(double sigma) { return Eigen::Matrix2d::Identity() * (sigma * sigma); }

}  // namespace

std::string_view toString(DetectorId id) {
    switch (id) {
        case DetectorId::security: return "security";
        case DetectorId::plausibility: return "plausibility";
        case DetectorId::consistency: return "consistency";
        case DetectorId::crossCheck: return "crossCheck";
        case DetectorId::ekfGate: return "ekfGate";
        case DetectorId::spatConflict: return "spatConflict";
        case DetectorId::camPerceptionDeviation: return "camPerceptionDeviation";
        case DetectorId::vruCollision: return "vruCollision";
        case DetectorId::canTiming: return "canTiming";
        case DetectorId::onboardMonitor: return "onboardMonitor";
    }
    return "?";
}

std::string_view toString(Anomaly anomaly) {
    switch (anomaly) {
        case Anomaly::badSignature: return "badSignature";
        case Anomaly::implausiblePayload: return "implausiblePayload";
        case Anomaly::inconsistentStream: return "inconsistentStream";
        case Anomaly::positionUsurpation: return "positionUsurpation";
        case Anomaly::ghost: return "ghost";
        case Anomaly::hijackedVehicle: return "hijackedVehicle";
        case Anomaly::conflictingGreens: return "conflictingGreens";
        case Anomaly::stopLie: return "stopLie";
        case Anomaly::imminentCollision: return "imminentCollision";
        case Anomaly::canDos: return "canDos";
        case Anomaly::canInjection: return "canInjection";
        case Anomaly::onboardCompromise: return "onboardCompromise";
    }
    return "?";
}

DetectorId detectorFromString(std::string_view name) {
    for (auto d : kAllDetectors) {
        if (toString(d) == name) {
            return d;
        }
    }
    throw InvariantViolation("unknown detector '" + std::string(name) + "'");
}

Anomaly anomalyFromString(std::string_view name) {
    for (auto a : kAllAnomalies) {
        if (toString(a) == name) {
            return a;
        }
    }
    throw InvariantViolation("unknown anomaly '" + std::string(name) + "'");
}

std::span<const Anomaly> anomaliesOf(DetectorId detector) {
    switch (detector) {
        case DetectorId::security: return kSecurity;
        case DetectorId::plausibility: return kPlausibility;
        case DetectorId::consistency: return kConsistency;
        case DetectorId::crossCheck: return kCross;
        case DetectorId::ekfGate: return kEkf;
        case DetectorId::spatConflict: return kSpat;
        case DetectorId::camPerceptionDeviation: return kCamPerception;
        case DetectorId::vruCollision: return kCollision;
        case DetectorId::canTiming: return kCan;
        case DetectorId::onboardMonitor: return kOnboard;
    }
    return {};
}

bool wellFormed(const DetectionReport& report) {
    const auto allowed = anomaliesOf(report.detector);
    if (std::find(allowed.begin(), allowed.end(), report.anomaly) == allowed.end()) {
        return false;
    }
    if (report.detector == DetectorId::vruCollision) {
        return report.tracks.size() == 2;
    }
    return !report.evidence.empty();
}

void validate(const DetectionConfig& cfg) {
    validate(cfg.gate);
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) {
            throw InvariantViolation(std::string(what) + " must be positive");
        }
    };
    positive(cfg.plausibility.maxSpeed, "plausibility.max_speed");
    positive(cfg.plausibility.maxAbsAccel, "plausibility.max_abs_accel");
    positive(cfg.consistency.baseGate, "consistency.base_gate");
    positive(cfg.consistency.teleport, "consistency.teleport");
    positive(cfg.crossCheck.rDup, "cross_check.r_dup");
    positive(cfg.crossCheck.rAssoc, "cross_check.r_assoc");
    positive(cfg.camPerception.sigmaCamSpeed + cfg.camPerception.sigmaPerceivedSpeed, "cam_perception sigmas");
    positive(cfg.camPerception.gateSigmas, "cam_perception.gate_sigmas");
    positive(cfg.collision.horizonS, "collision.horizon_s");
    positive(cfg.collision.dMin, "collision.d_min");
    positive(cfg.can.dosShare, "can.dos_share");
    positive(cfg.can.dosWindowMs, "can.dos_window_ms");
    positive(cfg.can.injectionRatio, "can.injection_ratio");
    positive(cfg.can.windowMs, "can.window_ms");
    if (!(cfg.collision.minVruTrackS >= 0.0)) {
        throw InvariantViolation("collision.min_vru_track_s must be non-negative");
    }
    if (cfg.crossCheck.windowK < 1 || cfg.camPerception.windowK < 1) {
        throw InvariantViolation("window sizes must be at least 1");
    }
}

Digest evidenceDigest(std::string_view label, ByteView data) {
    Bytes material(label.begin(), label.end());
    material.push_back(0);
    material.insert(material.end(), data.begin(), data.end());
    return sha256(material);
}

std::optional<DetectionReport> checkSecurity(const SignedMessage& msg, const Verifier& verifier, const Digest& digest,
                                             std::uint64_t nowMs) {
    const auto result = verifier.verify(msg, digest);
    if (result == VerifyResult::accept) {
        return std::nullopt;
    }
    auto r = makeReport(DetectorId::security, Anomaly::badSignature, Offender::station(msg.certificate.subject),
                        {digest}, nowMs);
    r.score = static_cast<double>(result);
    return r;
}

std::optional<DetectionReport> checkPlausibility(const CamPayload& cam, const PlausibilityConfig& cfg,
                                                 const Digest& digest, std::uint64_t nowMs) {
    if (plausibleState(cam.state, cfg)) {
        return std::nullopt;
    }
    auto r = makeReport(DetectorId::plausibility, Anomaly::implausiblePayload, Offender::station(cam.sender),
                        {digest}, nowMs);
    r.location = cam.state;
    r.score = cam.state.speed;
    return r;
}

std::optional<DetectionReport> checkPlausibility(const CpmPayload& cpm, const PlausibilityConfig& cfg,
                                                 const Digest& digest, std::uint64_t nowMs) {
    auto flag = [&](std::optional<KinematicState> where) {
        auto r = makeReport(DetectorId::plausibility, Anomaly::implausiblePayload, Offender::station(cpm.sender),
                            {digest}, nowMs);
        r.location = where;
        r.source = TrackSource::cpm;
        return r;
    };
    const auto& fov = cpm.sensorFov;
    if (!cfg.region.contains(fov.originX, fov.originY)) {
        return flag(std::nullopt);
    }
    for (const auto& o : cpm.objects) {
        if (!plausibleState(o.state, cfg) || !fov.contains(o.state.x, o.state.y)) {
            return flag(o.state);
        }
    }
    return std::nullopt;
}

double consistencyGate(double dtS, double previousSpeed, const ConsistencyConfig& cfg) {
    return cfg.baseGate + 0.5 * dtS * previousSpeed * cfg.slack;
}

std::optional<DetectionReport> checkConsistency(const Track& history, const CamPayload& next,
                                                const ConsistencyConfig& cfg, const Digest& digest,
                                                std::uint64_t nowMs) {
    if (history.empty()) {
        return std::nullopt;
    }
    const auto& prev = history.latest();
    auto flag = [&](double score) {
        auto r = makeReport(DetectorId::consistency, Anomaly::inconsistentStream, Offender::station(next.sender),
                            {digest}, nowMs);
        r.location = next.state;
        r.score = score;
        r.source = TrackSource::cam;
        return r;
    };
    if (next.genTime < prev.timeMs) {
        return flag(static_cast<double>(prev.timeMs - next.genTime));
    }
    const double jump = (pos(next.state) - pos(prev.state)).norm();
    if (jump > cfg.teleport) {
        return flag(jump);
    }
    const double dt = static_cast<double>(next.genTime - prev.timeMs) / 1000.0;
    const auto predicted = integrate(prev.state, dt);
    const double err = (pos(next.state) - pos(predicted)).norm();
    if (err > consistencyGate(dt, prev.state.speed, cfg)) {
        return flag(err);
    }
    return std::nullopt;
}

std::vector<std::size_t> findGhosts(std::span<const Vec2> remote, std::span<const PerceivedObject> local,
                                    const FieldOfView& localFov, const CrossCheckConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < remote.size(); ++i) {
        if (!localFov.contains(remote[i].x, remote[i].y, -cfg.fovMargin)) {
            continue;
        }
        const bool seen = std::any_of(local.begin(), local.end(), [&](const PerceivedObject& o) {
            return (pos(o.state) - remote[i]).norm() <= cfg.rAssoc;
        });
        if (!seen) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> findOmitted(std::span<const PerceivedObject> remote, std::span<const PerceivedObject> local,
                                     const FieldOfView& remoteFov, const CrossCheckConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < local.size(); ++i) {
        const auto p = pos(local[i].state);
        if (!remoteFov.contains(p.x, p.y, -cfg.fovMargin)) {
            continue;
        }
        const bool reported = std::any_of(remote.begin(), remote.end(), [&](const PerceivedObject& o) {
            return (pos(o.state) - p).norm() <= cfg.rAssoc;
        });
        if (!reported) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> findUsurpations(std::span<const Advertised> advertised,
                                                                 std::span<const PerceivedObject> local,
                                                                 const CrossCheckConfig& cfg) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < advertised.size(); ++i) {
        for (std::size_t j = i + 1; j < advertised.size(); ++j) {
            if (advertised[i].sender == advertised[j].sender) {
                continue;
            }
            const auto a = pos(advertised[i].state);
            const auto b = pos(advertised[j].state);
            if ((a - b).norm() > cfg.rDup) {
                continue;
            }
            const auto mid = (a + b) * 0.5;
            const bool occupied = std::any_of(local.begin(), local.end(), [&](const PerceivedObject& o) {
                return (pos(o.state) - mid).norm() <= cfg.rAssoc;
            });
            if (occupied) {
                out.emplace_back(i, j);
            }
        }
    }
    return out;
}

bool CrossChecker::hit(const Key& key) { return ++runs_[key] == cfg_.windowK; }

void CrossChecker::clearUnhit(Anomaly anomaly, std::uint32_t a, const std::set<Key>& hitNow) {
    for (auto it = runs_.begin(); it != runs_.end();) {
        const auto& k = it->first;
        if (k.anomaly == anomaly && (anomaly == Anomaly::positionUsurpation || k.a == a) && !hitNow.count(k)) {
            it = runs_.erase(it);
        } else {
            ++it;
        }
    }
}

std::vector<DetectionReport> CrossChecker::checkCpm(const CpmPayload& cpm, const Digest& digest,
                                                    std::span<const PerceivedObject> local,
                                                    const FieldOfView& localFov, std::uint64_t nowMs) {
    std::vector<DetectionReport> out;
    const auto sender = cpm.sender.value;

    std::vector<Vec2> remote;
    remote.reserve(cpm.objects.size());
    for (const auto& o : cpm.objects) {
        remote.push_back(pos(o.state));
    }
    std::set<Key> ghostHits;
    for (auto i : findGhosts(remote, local, localFov, cfg_)) {
        Key key{Anomaly::ghost, sender, cpm.objects[i].objectId};
        ghostHits.insert(key);
        if (hit(key)) {
            auto r = makeReport(DetectorId::crossCheck, Anomaly::ghost, Offender::station(cpm.sender), {digest}, nowMs);
            r.location = cpm.objects[i].state;
            r.source = TrackSource::cpm;
            out.push_back(std::move(r));
        }
    }
    clearUnhit(Anomaly::ghost, sender, ghostHits);

    std::set<Key> omitHits;
    for (auto i : findOmitted(cpm.objects, local, cpm.sensorFov, cfg_)) {
        Key key{Anomaly::hijackedVehicle, sender, local[i].objectId};
        omitHits.insert(key);
        if (hit(key)) {
            auto r = makeReport(DetectorId::crossCheck, Anomaly::hijackedVehicle, Offender::station(cpm.sender),
                                {digest}, nowMs);
            r.location = local[i].state;
            r.source = TrackSource::cpm;
            out.push_back(std::move(r));
        }
    }
    clearUnhit(Anomaly::hijackedVehicle, sender, omitHits);
    return out;
}

std::vector<DetectionReport> CrossChecker::checkAdvertised(std::span<const Advertised> advertised,
                                                           std::span<const PerceivedObject> local,
                                                           const FieldOfView& localFov, std::uint64_t nowMs) {
    std::vector<DetectionReport> out;
    for (const auto& a : advertised) {
        firstSeen_.try_emplace(a.sender, nowMs);
    }

    std::vector<Vec2> remote;
    for (const auto& a : advertised) {
        remote.push_back(pos(a.state));
    }
    std::set<Key> ghostHits;
    for (auto i : findGhosts(remote, local, localFov, cfg_)) {
        Key key{Anomaly::ghost, advertised[i].sender.value, 0};
        ghostHits.insert(key);
        if (hit(key)) {
            auto r = makeReport(DetectorId::crossCheck, Anomaly::ghost, Offender::station(advertised[i].sender),
                                {advertised[i].evidence}, nowMs);
            r.location = advertised[i].state;
            r.source = TrackSource::cam;
            out.push_back(std::move(r));
        }
    }
    for (const auto& a : advertised) {
        clearUnhit(Anomaly::ghost, a.sender.value, ghostHits);
    }

    std::set<Key> dupHits;
    for (auto [i, j] : findUsurpations(advertised, local, cfg_)) {
        const auto& a = advertised[i];
        const auto& b = advertised[j];
        Key key{Anomaly::positionUsurpation, std::min(a.sender.value, b.sender.value),
                std::max(a.sender.value, b.sender.value)};
        dupHits.insert(key);
        if (hit(key)) {
            // the identity that showed up later is the likelier impostor
            const auto seenA = firstSeen_.at(a.sender);
            const auto seenB = firstSeen_.at(b.sender);
            const auto& suspect = (seenB > seenA || (seenB == seenA && b.sender > a.sender)) ? b : a;
            auto r = makeReport(DetectorId::crossCheck, Anomaly::positionUsurpation, Offender::station(suspect.sender),
                                {a.evidence, b.evidence}, nowMs);
            r.location = suspect.state;
            r.source = TrackSource::cam;
            out.push_back(std::move(r));
        }
    }
    clearUnhit(Anomaly::positionUsurpation, 0, dupHits);
    return out;
}

VruMonitor::VruMonitor(GateConfig gate, SensorNoise onboard, SensorNoise cpm, double assocRadius)
    : gateCfg_(gate), onboard_(onboard), cpm_(cpm), assocRadius_(assocRadius) {}

const std::vector<double>& VruMonitor::nisLog(TrackSource source, MeasurementKind kind) const {
    static const std::vector<double> kEmpty;
    auto it = nis_.find({source, kind});
    return it == nis_.end() ? kEmpty : it->second;
}

std::optional<DetectionReport> VruMonitor::gate(Filter& f, const FilterKey& key, TrackSource source,
                                                MeasurementKind kind, double nis, const Digest& evidence,
                                                std::uint64_t nowMs) {
    nis_[{source, kind}].push_back(nis);
    auto [it, inserted] = f.gates.try_emplace({source, kind}, gateCfg_);
    if (!it->second.observe(nis)) {
        return std::nullopt;
    }
    const Offender offender = source == TrackSource::cpm ? Offender::station(StationId{key.first}) : Offender{};
    auto r = makeReport(DetectorId::ekfGate, Anomaly::inconsistentStream, offender, {evidence}, nowMs);
    r.source = source;
    r.score = nis;
    r.tracks.push_back({TrackSource::cpm, key.second});
    KinematicState where;
    where.x = f.ekf.x(0);
    where.y = f.ekf.x(1);
    r.location = where;
    return r;
}

// Measurements inside a run of gate exceedances are not fused; a persistent lie would otherwise
// drag the filter toward itself and shrink its own innovations.
bool VruMonitor::outlier(const Filter& f, TrackSource source, MeasurementKind kind) {
    auto it = f.gates.find({source, kind});
    return it != f.gates.end() && it->second.run() > 0;
}

std::vector<DetectionReport> VruMonitor::onOnboard(std::uint64_t timeMs, std::span<const PerceivedObject> detections) {
    std::vector<DetectionReport> out;
    const auto Ron = isotropic(onboard_.sigmaPos);
    const auto RonV = isotropic(onboard_.sigmaVel);
    for (auto it = filters_.begin(); it != filters_.end();) {
        auto& [key, f] = *it;
        if (f.ekf.lastTimeMs > timeMs) {
            ++it;
            continue;
        }
        if (f.ekf.lastTimeMs + 3000 < timeMs) {
            it = filters_.erase(it);
            continue;
        }
        const auto predicted = ekfPredict(f.ekf, timeMs, gateCfg_.processNoise);
        const PerceivedObject* best = nullptr;
        double bestDist = assocRadius_;
        for (const auto& d : detections) {
            if (d.classification != ObjectClass::pedestrian && d.classification != ObjectClass::cyclist) {
                continue;
            }
            const double dist = std::hypot(d.state.x - predicted.x(0), d.state.y - predicted.x(1));
            if (dist <= bestDist) {
                bestDist = dist;
                best = &d;
            }
        }
        if (best) {
            const auto evidence = evidenceDigest("onboard", encodeState(best->state));
            // one ego detection can feed several sender filters; report it once
            auto reported = [&] {
                return std::any_of(out.begin(), out.end(), [&](const DetectionReport& r) {
                    return r.source == TrackSource::onboard && r.evidence.front() == evidence;
                });
            };
            const Eigen::Vector2d zp(best->state.x, best->state.y);
            const auto v = velocity(best->state);
            const Eigen::Vector2d zv(v.x, v.y);
            auto up = ekfUpdate(predicted, zp, Ron, MeasurementKind::position);
            if (auto r = gate(f, key, TrackSource::onboard, MeasurementKind::position, up.nis, evidence, timeMs);
                r && !reported()) {
                out.push_back(std::move(*r));
            }
            const auto afterPos = outlier(f, TrackSource::onboard, MeasurementKind::position) ? predicted : up.state;
            auto uv = ekfUpdate(afterPos, zv, RonV, MeasurementKind::velocity);
            if (auto r = gate(f, key, TrackSource::onboard, MeasurementKind::velocity, uv.nis, evidence, timeMs);
                r && !reported()) {
                out.push_back(std::move(*r));
            }
            f.ekf = outlier(f, TrackSource::onboard, MeasurementKind::velocity) ? afterPos : uv.state;
            f.snapshots.push_back({timeMs, f.ekf});
            if (f.snapshots.size() > 16) {
                f.snapshots.erase(f.snapshots.begin());
            }
        }
        ++it;
    }
    return out;
}

std::vector<DetectionReport> VruMonitor::onCpm(const CpmPayload& cpm, const Digest& digest, std::uint64_t nowMs) {
    std::vector<DetectionReport> out;
    auto noise = senderNoise_.find(cpm.sender.value);
    const SensorNoise& sn = noise == senderNoise_.end() ? cpm_ : noise->second;
    const auto Rp = isotropic(sn.sigmaPos);
    const auto Rv = isotropic(sn.sigmaVel);
    for (const auto& o : cpm.objects) {
        if ((o.classification != ObjectClass::pedestrian && o.classification != ObjectClass::cyclist) ||
            o.confidence < gateCfg_.minConfidence) {
            continue;
        }
        const FilterKey key{cpm.sender.value, o.objectId};
        const auto v = velocity(o.state);
        const Eigen::Vector2d zp(o.state.x, o.state.y);
        const Eigen::Vector2d zv(v.x, v.y);
        auto it = filters_.find(key);
        if (it == filters_.end()) {
            Filter f;
            f.ekf = ekfInit(zp, zv, Rp(0, 0), Rv(0, 0), cpm.genTime);
            filters_.emplace(key, std::move(f));
            continue;
        }
        auto& f = it->second;
        auto snap = std::find_if(f.snapshots.rbegin(), f.snapshots.rend(),
                                 [&](const Snapshot& s) { return s.timeMs == cpm.genTime; });
        if (snap != f.snapshots.rend()) {
            // the ego sensor owns this filter: validate without updating
            const double np = ekfNis(snap->state, zp, Rp, MeasurementKind::position);
            const double nv = ekfNis(snap->state, zv, Rv, MeasurementKind::velocity);
            if (auto r = gate(f, key, TrackSource::cpm, MeasurementKind::position, np, digest, nowMs)) {
                out.push_back(std::move(*r));
            }
            if (auto r = gate(f, key, TrackSource::cpm, MeasurementKind::velocity, nv, digest, nowMs)) {
                out.push_back(std::move(*r));
            }
        } else if (f.ekf.lastTimeMs <= cpm.genTime) {
            const auto predicted = ekfPredict(f.ekf, cpm.genTime, gateCfg_.processNoise);
            auto up = ekfUpdate(predicted, zp, Rp, MeasurementKind::position);
            if (auto r = gate(f, key, TrackSource::cpm, MeasurementKind::position, up.nis, digest, nowMs)) {
                out.push_back(std::move(*r));
            }
            const auto afterPos = outlier(f, TrackSource::cpm, MeasurementKind::position) ? predicted : up.state;
            auto uv = ekfUpdate(afterPos, zv, Rv, MeasurementKind::velocity);
            if (auto r = gate(f, key, TrackSource::cpm, MeasurementKind::velocity, uv.nis, digest, nowMs)) {
                out.push_back(std::move(*r));
            }
            f.ekf = outlier(f, TrackSource::cpm, MeasurementKind::velocity) ? afterPos : uv.state;
        }
    }
    return out;
}

void SpatHistory::record(const SpatPayload& spat) {
    for (const auto& ph : spat.phases) {
        entries_[ph.signalGroup] = {ph.state, spat.genTime, ph.timeToChangeMs};
    }
}

std::optional<SpatHistory::Entry> SpatHistory::last(std::uint8_t group) const {
    auto it = entries_.find(group);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<DetectionReport> checkSpatConflicts(const SpatPayload& spat, const ConflictMatrix& cm,
                                                  const SpatHistory* history, const Digest& digest,
                                                  std::uint64_t nowMs, std::uint64_t toleranceMs) {
    std::vector<std::uint8_t> greens;
    for (const auto& ph : spat.phases) {
        if (!cm.contains(ph.signalGroup)) {
            throw UnknownSignalGroup("SPaT references signal group " + std::to_string(ph.signalGroup));
        }
        if (ph.state == SignalState::green) {
            greens.push_back(ph.signalGroup);
        }
    }
    int pairs = 0;
    for (std::size_t i = 0; i < greens.size(); ++i) {
        for (std::size_t j = i + 1; j < greens.size(); ++j) {
            if (cm.conflicts(greens[i], greens[j])) {
                ++pairs;
            }
        }
    }
    if (pairs > 0) {
        auto r = makeReport(DetectorId::spatConflict, Anomaly::conflictingGreens, Offender::station(spat.sender),
                            {digest}, nowMs);
        r.score = pairs;
        return r;
    }
    if (history) {
        for (const auto& ph : spat.phases) {
            const auto prev = history->last(ph.signalGroup);
            if (!prev || ph.state != SignalState::green || prev->state != SignalState::red) {
                continue;
            }
            const auto announced = prev->genTimeMs + prev->timeToChangeMs;
            if (spat.genTime + toleranceMs < announced) {
                auto r = makeReport(DetectorId::spatConflict, Anomaly::implausiblePayload,
                                    Offender::station(spat.sender), {digest}, nowMs);
                r.score = static_cast<double>(announced - spat.genTime);
                return r;
            }
        }
    }
    return std::nullopt;
}

std::optional<DeviationSample> checkCamPerceptionDeviation(const Track& cam, const Track& perceived,
                                                           const CamPerceptionConfig& cfg) {
    if (cam.empty()) {
        return std::nullopt;
    }
    const auto& c = cam.latest();
    const auto p = perceived.at(c.timeMs);
    if (!p || !p->measured) {
        return std::nullopt;
    }
    DeviationSample out;
    out.deviation = p->state.speed - c.state.speed;
    const double sigma = std::hypot(cfg.sigmaCamSpeed, cfg.sigmaPerceivedSpeed);
    const bool trending = cam.size() >= 2 && c.state.speed <= cam[cam.size() - 2].state.speed;
    out.exceeds = std::abs(out.deviation) > cfg.gateSigmas * sigma && c.state.speed < p->state.speed && trending &&
                  p->state.speed >= cfg.minPerceivedSpeed;
    return out;
}

std::optional<std::uint32_t> CamPerceptionMonitor::associated(StationId sender) const {
    auto it = states_.find(sender);
    if (it == states_.end()) {
        return std::nullopt;
    }
    return it->second.object;
}

std::optional<DetectionReport> CamPerceptionMonitor::observe(StationId sender, const Track& camTrack,
                                                             const std::map<std::uint32_t, Track>& perceived,
                                                             const Digest& digest, std::uint64_t nowMs) {
    if (camTrack.empty()) {
        return std::nullopt;
    }
    auto& st = states_[sender];
    const auto& c = camTrack.latest();
    if (!st.object || !perceived.count(*st.object)) {
        st.object.reset();
        double best = cfg_.assocRadius;
        for (const auto& [id, track] : perceived) {
            const auto p = track.at(c.timeMs);
            if (!p) {
                continue;
            }
            const double d = (pos(p->state) - pos(c.state)).norm();
            if (d <= best) {
                best = d;
                st.object = id;
            }
        }
        if (!st.object) {
            return std::nullopt;
        }
    }
    const auto& track = perceived.at(*st.object);
    const auto sample = checkCamPerceptionDeviation(camTrack, track, cfg_);
    if (!sample) {
        return std::nullopt;
    }
    if (!sample->exceeds) {
        st.run = 0;
        st.evidence.clear();
        return std::nullopt;
    }
    st.evidence.push_back(digest);
    if (++st.run != cfg_.windowK) {
        return std::nullopt;
    }
    auto r = makeReport(DetectorId::camPerceptionDeviation, Anomaly::stopLie, Offender::station(sender), st.evidence,
                        nowMs);
    r.source = TrackSource::cam;
    r.score = sample->deviation;
    r.location = track.at(c.timeMs)->state;
    r.tracks = {{TrackSource::cam, sender.value}, {TrackSource::cpm, *st.object}};
    return r;
}

ClosestApproach closestApproach(Vec2 p1, Vec2 v1, Vec2 p2, Vec2 v2, double horizonS) {
    const Vec2 dp = p2 - p1;
    const Vec2 dv = v2 - v1;
    const double vv = dv.dot(dv);
    double t = vv > 0.0 ? -dp.dot(dv) / vv : 0.0;
    t = std::clamp(t, 0.0, horizonS);
    return {t, (dp + dv * t).norm()};
}

ClosestApproach closestApproach(Vec2 vruPos, Vec2 vruVel, Vec2 threatPos, Vec2 threatDir, double threatSpeed,
                                double threatAccel, double horizonS) {
    if (threatAccel == 0.0) {
        return closestApproach(vruPos, vruVel, threatPos, threatDir * threatSpeed, horizonS);
    }
    constexpr double kStep = 0.01;
    ClosestApproach best{0.0, (threatPos - vruPos).norm()};
    const int n = static_cast<int>(std::ceil(horizonS / kStep));
    for (int i = 1; i <= n; ++i) {
        const double t = std::min(horizonS, i * kStep);
        const auto along = advance(threatSpeed, threatAccel, t);
        const double d = (threatPos + threatDir * along.distance - (vruPos + vruVel * t)).norm();
        if (d < best.distance) {
            best = {t, d};
        }
    }
    return best;
}

namespace {

struct LineFit {
    double at0 = 0.0;  // value at the newest sample
    double slope = 0.0;
};

// Least squares over samples [start, n) against time relative to the newest sample.
template <class Get>
std::optional<LineFit> fitLine(const Track& track, std::size_t start, Get get) {
    const std::size_t n = track.size();
    const double t0 = static_cast<double>(track.latest().timeMs);
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double m = static_cast<double>(n - start);
    for (std::size_t i = start; i < n; ++i) {
        const double t = (static_cast<double>(track[i].timeMs) - t0) / 1000.0;
        const double y = get(track[i].state);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double den = m * stt - st * st;
    if (den <= 0.0) {
        return std::nullopt;
    }
    const double slope = (m * sty - st * sy) / den;
    return LineFit{(sy - slope * st) / m, slope};
}

// First sample of the fit window, or nullopt when the history is too short to fit.
std::optional<std::size_t> fitWindow(const Track& track, double windowS) {
    const std::size_t n = track.size();
    if (n < 6) {
        return std::nullopt;
    }
    const auto horizon = static_cast<std::uint64_t>(windowS * 1000.0);
    if (track.latest().timeMs < track[0].timeMs + horizon / 2) {
        return std::nullopt;
    }
    std::size_t start = 0;
    while (start + 6 < n && track[start].timeMs + horizon < track.latest().timeMs) {
        ++start;
    }
    return start;
}

}  // namespace

SpeedFit fitSpeed(const Track& track, double windowS) {
    if (track.empty()) {
        return {};
    }
    SpeedFit fit{track.latest().state.speed, 0.0};
    const auto start = fitWindow(track, windowS);
    if (!start) {
        return fit;
    }
    if (const auto line = fitLine(track, *start, [](const KinematicState& k) { return k.speed; })) {
        fit.speed = std::max(0.0, line->at0);
        fit.accel = line->slope;
    }
    return fit;
}

MotionFit fitMotion(const Track& track, double windowS) {
    MotionFit out;
    if (track.empty()) {
        return out;
    }
    const auto& s = track.latest().state;
    out.position = {s.x, s.y};
    out.direction = {std::cos(s.heading), std::sin(s.heading)};
    out.speed = fitSpeed(track, windowS);
    const auto start = fitWindow(track, windowS);
    if (!start) {
        return out;
    }
    const std::size_t n = track.size();
    Vec2 heading{0.0, 0.0};
    for (std::size_t i = *start; i < n; ++i) {
        // a near-stationary sample's heading is mostly noise
        const double w = track[i].state.speed;
        heading = heading + Vec2{std::cos(track[i].state.heading), std::sin(track[i].state.heading)} * w;
    }
    if (heading.norm() < 1e-9) {
        return out;
    }
    out.direction = heading * (1.0 / heading.norm());
    // carry every sample forward to the newest time along the fitted speed profile, then average
    const double t0 = static_cast<double>(track.latest().timeMs);
    const double v0 = out.speed.speed;
    const double a = out.speed.accel;
    Vec2 sum{0.0, 0.0};
    for (std::size_t i = *start; i < n; ++i) {
        const double t = (static_cast<double>(track[i].timeMs) - t0) / 1000.0;
        const double travelled = std::max(0.0, -v0 * t - 0.5 * a * t * t);
        sum = sum + Vec2{track[i].state.x, track[i].state.y} + out.direction * travelled;
    }
    out.position = sum * (1.0 / static_cast<double>(n - *start));
    return out;
}

std::optional<CollisionThreat> predictVruCollision(const Track& vru, std::span<const Track* const> threats,
                                                   const CollisionConfig& cfg) {
    if (vru.size() < 2 ||
        static_cast<double>(vru.latest().timeMs - vru[0].timeMs) < cfg.minVruTrackS * 1000.0) {
        return std::nullopt;
    }
    const auto& v = vru.latest().state;
    std::optional<CollisionThreat> best;
    for (std::size_t i = 0; i < threats.size(); ++i) {
        const Track& t = *threats[i];
        if (t.size() < 2) {
            continue;
        }
        const auto& s = t.latest().state;
        if (s.speed < cfg.minThreatSpeed) {
            continue;
        }
        const auto fit = fitMotion(t, cfg.accelWindowS);
        const double accel = std::clamp(fit.speed.accel, -8.0, 3.0);
        const auto cpa =
            closestApproach(pos(v), velocity(v), fit.position, fit.direction, fit.speed.speed, accel, cfg.horizonS);
        if (cpa.distance < cfg.dMin && (!best || cpa.timeS < best->cpa.timeS)) {
            best = CollisionThreat{cpa, i};
        }
    }
    return best;
}

std::vector<DetectionReport> CollisionMonitor::observe(const std::map<std::uint32_t, Track>& vrus,
                                                       const std::map<std::uint32_t, Track>& threats,
                                                       std::uint64_t nowMs) {
    std::vector<DetectionReport> out;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [vruId, vruTrack] : vrus) {
        for (const auto& [threatId, threatTrack] : threats) {
            const std::pair key{vruId, threatId};
            seen.insert(key);
            const Track* one[] = {&threatTrack};
            const auto hitNow = predictVruCollision(vruTrack, one, cfg_);
            auto it = state_.find(key);
            if (hitNow) {
                if (it == state_.end()) {
                    DetectionReport r;
                    r.detector = DetectorId::vruCollision;
                    r.anomaly = Anomaly::imminentCollision;
                    r.simTimeMs = nowMs;
                    r.tracks = {{TrackSource::uwb, vruId}, {TrackSource::cpm, threatId}};
                    r.ttcS = hitNow->cpa.timeS;
                    r.score = hitNow->cpa.distance;
                    r.location = vruTrack.latest().state;
                    out.push_back(std::move(r));
                }
                state_[key] = 1;
            } else if (it != state_.end()) {
                it->second = it->second > 0 ? -1 : it->second - 1;
                if (it->second <= -cfg_.clearSteps) {
                    state_.erase(it);
                }
            }
        }
    }
    // pairs whose tracks vanished are forgotten
    for (auto it = state_.begin(); it != state_.end();) {
        it = seen.count(it->first) ? std::next(it) : state_.erase(it);
    }
    return out;
}

std::optional<DetectionReport> OnboardMonitor::observe(bool asserted, StationId self, std::uint64_t nowMs) {
    const bool rising = asserted && !last_;
    last_ = asserted;
    if (!rising) {
        return std::nullopt;
    }
    wire::Writer w;
    w.u32(self.value);
    w.u64(nowMs);
    const auto bytes = w.take();
    auto r = makeReport(DetectorId::onboardMonitor, Anomaly::onboardCompromise, Offender::station(self),
                        {evidenceDigest("onboard-signal", bytes)}, nowMs);
    return r;
}

}  // namespace sentinel
