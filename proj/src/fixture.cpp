#include "sentinel/fixture.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace sentinel {

FixtureError::FixtureError(std::string source, int line, int column, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) + ":" + std::to_string(column) : "") +
                         ": " + message),
      source_(std::move(source)),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

using Handler = std::function<void(const YAML::Node&)>;
using Fields = std::vector<std::pair<std::string, Handler>>;

// Decodes one layer (file or override) onto an existing Fixture.
class Layer {
public:
    explicit Layer(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        const auto m = n.Mark();
        if (m.is_null()) {
            throw FixtureError(source_, 0, 0, msg);
        }
        throw FixtureError(source_, m.line + 1, m.column + 1, msg);
    }

    void map(const YAML::Node& n, const std::string& what, const Fields& fields) const {
        if (!n.IsMap()) {
            fail(n, what + " must be a mapping");
        }
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            bool known = false;
            for (const auto& [name, handler] : fields) {
                if (name == key) {
                    handler(kv.second);
                    known = true;
                    break;
                }
            }
            if (!known) {
                std::string allowed;
                for (const auto& f : fields) {
                    allowed += (allowed.empty() ? "" : ", ") + f.first;
                }
                fail(kv.first, "unknown key '" + key + "' in " + what + " (expected one of: " + allowed + ")");
            }
        }
    }

    std::string str(const YAML::Node& n) const {
        if (!n.IsScalar()) {
            fail(n, "expected a scalar");
        }
        return n.Scalar();
    }

    double real(const YAML::Node& n) const {
        if (!n.IsScalar()) {
            fail(n, "expected a number");
        }
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) {
                fail(n, "expected a finite number");
            }
            return v;
        } catch (const YAML::BadConversion&) {
            fail(n, "expected a number, got '" + n.Scalar() + "'");
        }
    }

    template <class T>
    T integer(const YAML::Node& n) const {
        if (!n.IsScalar()) {
            fail(n, "expected an integer");
        }
        const std::string s = n.Scalar();
        long long v = 0;
        try {
            std::size_t used = 0;
            v = std::stoll(s, &used, 0);
            if (used != s.size()) {
                throw std::invalid_argument(s);
            }
        } catch (const std::exception&) {
            fail(n, "expected an integer, got '" + s + "'");
        }
        if (v < static_cast<long long>(std::numeric_limits<T>::min()) ||
            static_cast<unsigned long long>(v) > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
            fail(n, "integer " + s + " out of range");
        }
        return static_cast<T>(v);
    }

    std::uint64_t u64(const YAML::Node& n) const {
        if (!n.IsScalar()) {
            fail(n, "expected an integer");
        }
        const std::string s = n.Scalar();
        try {
            std::size_t used = 0;
            if (!s.empty() && s[0] == '-') {
                throw std::invalid_argument(s);
            }
            const auto v = std::stoull(s, &used, 0);
            if (used != s.size()) {
                throw std::invalid_argument(s);
            }
            return v;
        } catch (const std::exception&) {
            fail(n, "expected a non-negative integer, got '" + s + "'");
        }
    }

    bool boolean(const YAML::Node& n) const {
        try {
            return n.as<bool>();
        } catch (const YAML::BadConversion&) {
            fail(n, "expected true or false");
        }
    }

    template <class E, class ToString>
    E enumeration(const YAML::Node& n, std::initializer_list<E> values, ToString name) const {
        const auto s = str(n);
        std::string allowed;
        for (auto v : values) {
            if (std::string(name(v)) == s) {
                return v;
            }
            allowed += (allowed.empty() ? "" : ", ") + std::string(name(v));
        }
        fail(n, "unknown value '" + s + "' (expected one of: " + allowed + ")");
    }

    template <class F>
    auto parsed(const YAML::Node& n, F parse) const {
        const auto s = str(n);
        try {
            return parse(s);
        } catch (const std::exception& e) {
            fail(n, e.what());
        }
    }

    Vec2 point(const YAML::Node& n) const {
        if (!n.IsSequence() || n.size() != 2) {
            fail(n, "expected a point [x, y]");
        }
        return {real(n[0]), real(n[1])};
    }

    Polyline polyline(const YAML::Node& n) const {
        if (!n.IsSequence()) {
            fail(n, "expected a list of points");
        }
        Polyline out;
        for (const auto& p : n) {
            out.push_back(point(p));
        }
        return out;
    }

    // A sequence replaces `items`; a mapping of index (or name) keys patches elements in place.
    template <class T>
    void list(const YAML::Node& n, const std::string& what, std::vector<T>& items,
              const std::function<void(const YAML::Node&, T&)>& decode,
              const std::function<std::optional<std::size_t>(const std::string&)>& byName = {}) const {
        if (n.IsSequence()) {
            items.clear();
            for (const auto& item : n) {
                T value{};
                decode(item, value);
                items.push_back(std::move(value));
            }
            return;
        }
        if (!n.IsMap()) {
            fail(n, what + " must be a list");
        }
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            std::optional<std::size_t> idx;
            if (byName) {
                idx = byName(key);
            }
            if (!idx) {
                try {
                    std::size_t used = 0;
                    const auto v = std::stoul(key, &used);
                    if (used == key.size()) {
                        idx = v;
                    }
                } catch (const std::exception&) {
                }
            }
            if (!idx || *idx >= items.size()) {
                fail(kv.first, "no element '" + key + "' in " + what);
            }
            decode(kv.second, items[*idx]);
        }
    }

    // --- sections

    void sim(const YAML::Node& n, SimConfig& c) const {
        map(n, "sim",
            {
                {"step_ms", [&](const YAML::Node& v) { c.stepMs = integer<std::uint32_t>(v); }},
                {"duration_ms", [&](const YAML::Node& v) { c.durationMs = u64(v); }},
                {"seed", [&](const YAML::Node& v) { c.seed = u64(v); }},
                {"loss_probability", [&](const YAML::Node& v) { c.lossProbability = real(v); }},
                {"latency_steps", [&](const YAML::Node& v) { c.latencySteps = integer<std::uint32_t>(v); }},
                {"scenario",
                 [&](const YAML::Node& v) {
                     c.scenario = enumeration(v,
                                              {ScenarioKind::clean, ScenarioKind::s1, ScenarioKind::s2,
                                               ScenarioKind::s3, ScenarioKind::s4, ScenarioKind::s5},
                                              [](ScenarioKind k) { return toString(k); });
                 }},
                {"cpm_every_steps", [&](const YAML::Node& v) { c.cpmEverySteps = integer<std::uint32_t>(v); }},
                {"spat_every_steps", [&](const YAML::Node& v) { c.spatEverySteps = integer<std::uint32_t>(v); }},
                {"denm_repeat_steps", [&](const YAML::Node& v) { c.denmRepeatSteps = integer<std::uint32_t>(v); }},
                {"denm_lifetime_ms", [&](const YAML::Node& v) { c.denmLifetimeMs = u64(v); }},
            });
    }

    void lane(const YAML::Node& n, LaneSpec& l) const {
        const auto approach = [&](const YAML::Node& v) {
            return enumeration(v, {Approach::N, Approach::E, Approach::S, Approach::W},
                               [](Approach a) { return toString(a); });
        };
        map(n, "lane",
            {
                {"id", [&](const YAML::Node& v) { l.id = integer<std::uint16_t>(v); }},
                {"ingress", [&](const YAML::Node& v) { l.ingress = approach(v); }},
                {"egress", [&](const YAML::Node& v) { l.egress = approach(v); }},
                {"signal_group", [&](const YAML::Node& v) { l.signalGroup = integer<std::uint8_t>(v); }},
                {"centerline", [&](const YAML::Node& v) { l.centerline = polyline(v); }},
            });
    }

    std::vector<std::uint8_t> groups(const YAML::Node& n) const {
        if (!n.IsSequence()) {
            fail(n, "expected a list of signal groups");
        }
        std::vector<std::uint8_t> out;
        for (const auto& g : n) {
            out.push_back(integer<std::uint8_t>(g));
        }
        return out;
    }

    void phase(const YAML::Node& n, PhaseSpec& p) const {
        map(n, "phase",
            {
                {"groups", [&](const YAML::Node& v) { p.groups = groups(v); }},
                {"green_ms", [&](const YAML::Node& v) { p.greenMs = integer<std::uint32_t>(v); }},
                {"yellow_ms", [&](const YAML::Node& v) { p.yellowMs = integer<std::uint32_t>(v); }},
                {"all_red_ms", [&](const YAML::Node& v) { p.allRedMs = integer<std::uint32_t>(v); }},
            });
    }

    void intersection(const YAML::Node& n, IntersectionSpec& ix) const {
        map(n, "intersection",
            {
                {"offset_ms", [&](const YAML::Node& v) { ix.offsetMs = integer<std::uint32_t>(v); }},
                {"stop_buffer", [&](const YAML::Node& v) { ix.stopBuffer = real(v); }},
                {"approach_length", [&](const YAML::Node& v) { ix.approachLength = real(v); }},
                {"exit_length", [&](const YAML::Node& v) { ix.exitLength = real(v); }},
                {"signal_groups", [&](const YAML::Node& v) { ix.signalGroups = groups(v); }},
                {"phases",
                 [&](const YAML::Node& v) {
                     list<PhaseSpec>(v, "phases", ix.phases, [&](const YAML::Node& e, PhaseSpec& p) { phase(e, p); });
                 }},
                {"lanes",
                 [&](const YAML::Node& v) {
                     list<LaneSpec>(v, "lanes", ix.lanes, [&](const YAML::Node& e, LaneSpec& l) { lane(e, l); });
                 }},
            });
    }

    void fov(const YAML::Node& n, FieldOfView& f) const {
        map(n, "fov",
            {
                {"origin",
                 [&](const YAML::Node& v) {
                     const auto p = point(v);
                     f.originX = p.x;
                     f.originY = p.y;
                 }},
                {"orientation_deg", [&](const YAML::Node& v) { f.orientation = real(v) * kDegToRad; }},
                {"range", [&](const YAML::Node& v) { f.range = real(v); }},
                {"half_angle_deg", [&](const YAML::Node& v) { f.halfAngle = real(v) * kDegToRad; }},
            });
    }

    void camera(const YAML::Node& n, CameraSpec& c) const {
        map(n, "camera",
            {
                {"fov", [&](const YAML::Node& v) { fov(v, c.fov); }},
                {"sigma_pos", [&](const YAML::Node& v) { c.sigmaPos = real(v); }},
                {"sigma_vel", [&](const YAML::Node& v) { c.sigmaVel = real(v); }},
                {"detection_probability", [&](const YAML::Node& v) { c.detectionProbability = real(v); }},
                {"coast_steps", [&](const YAML::Node& v) { c.coastSteps = integer<int>(v); }},
            });
    }

    void sensor(const YAML::Node& n, OnboardSensorSpec& s) const {
        map(n, "sensor",
            {
                {"enabled", [&](const YAML::Node& v) { s.enabled = boolean(v); }},
                {"range", [&](const YAML::Node& v) { s.range = real(v); }},
                {"half_angle_deg", [&](const YAML::Node& v) { s.halfAngle = real(v) * kDegToRad; }},
                {"sigma_pos", [&](const YAML::Node& v) { s.sigmaPos = real(v); }},
                {"sigma_vel", [&](const YAML::Node& v) { s.sigmaVel = real(v); }},
            });
    }

    void actor(const YAML::Node& n, ActorSpec& a) const {
        if (!n.IsMap()) {
            fail(n, "actor must be a mapping");
        }
        // kind first: the remaining keys depend on it
        if (const auto k = n["kind"]) {
            a.kind = enumeration(k, {ActorKind::vehicle, ActorKind::vru},
                                 [](ActorKind x) { return x == ActorKind::vehicle ? "vehicle" : "vru"; });
        }
        Fields common{
            {"name", [&](const YAML::Node& v) { a.name = str(v); }},
            {"kind", [](const YAML::Node&) {}},
            {"station", [&](const YAML::Node& v) { a.station = integer<std::uint32_t>(v); }},
        };
        auto& vs = a.vehicle;
        auto& ps = a.vru;
        Fields specific;
        if (a.kind == ActorKind::vehicle) {
            specific = {
                {"lane", [&](const YAML::Node& v) { vs.lane = integer<std::uint16_t>(v); }},
                {"start_distance", [&](const YAML::Node& v) { vs.startDistance = real(v); }},
                {"speed", [&](const YAML::Node& v) { vs.speed = real(v); }},
                {"target_speed", [&](const YAML::Node& v) { vs.targetSpeed = real(v); }},
                {"spawn_ms", [&](const YAML::Node& v) { vs.spawnMs = u64(v); }},
                {"sensor", [&](const YAML::Node& v) { sensor(v, vs.sensor); }},
                {"emits_cpm", [&](const YAML::Node& v) { vs.emitsCpm = boolean(v); }},
                {"can_bus", [&](const YAML::Node& v) { vs.canBus = boolean(v); }},
            };
        } else {
            specific = {
                {"waypoints", [&](const YAML::Node& v) { ps.waypoints = polyline(v); }},
                {"speed", [&](const YAML::Node& v) { ps.speed = real(v); }},
                {"start_ms", [&](const YAML::Node& v) { ps.startMs = u64(v); }},
                {"tag", [&](const YAML::Node& v) { ps.tag = boolean(v); }},
                {"classification",
                 [&](const YAML::Node& v) {
                     ps.classification =
                         enumeration(v, {ObjectClass::pedestrian, ObjectClass::cyclist, ObjectClass::unknown},
                                     [](ObjectClass c) { return toString(c); });
                 }},
            };
        }
        common.insert(common.end(), specific.begin(), specific.end());
        map(n, a.kind == ActorKind::vehicle ? "vehicle actor" : "vru actor", common);
    }

    void attack(const YAML::Node& n, AttackSpec& at) const {
        map(n, "attack",
            {
                {"onset_ms", [&](const YAML::Node& v) { at.onsetMs = u64(v); }},
                {"cpm_mode",
                 [&](const YAML::Node& v) {
                     at.cpmMode = enumeration(v, {CpmAttackMode::falseState, CpmAttackMode::ghost, CpmAttackMode::suppress},
                                              [](CpmAttackMode m) { return toString(m); });
                 }},
                {"victim", [&](const YAML::Node& v) { at.victim = str(v); }},
                {"target", [&](const YAML::Node& v) { at.target = str(v); }},
                {"false_speed", [&](const YAML::Node& v) { at.falseSpeed = real(v); }},
                {"ghost_ahead", [&](const YAML::Node& v) { at.ghostAhead = real(v); }},
                {"hacked_vehicle", [&](const YAML::Node& v) { at.hackedVehicle = str(v); }},
                {"approach_speed", [&](const YAML::Node& v) { at.approachSpeed = real(v); }},
                {"spat_mode",
                 [&](const YAML::Node& v) {
                     at.spatMode = enumeration(v, {SpatAttackMode::allGreen, SpatAttackMode::conflictingPair},
                                               [](SpatAttackMode m) { return toString(m); });
                 }},
                {"pair",
                 [&](const YAML::Node& v) {
                     const auto g = groups(v);
                     if (g.size() != 2) {
                         fail(v, "pair needs exactly two signal groups");
                     }
                     at.pairA = g[0];
                     at.pairB = g[1];
                 }},
                {"onboard_mode",
                 [&](const YAML::Node& v) {
                     at.onboardMode = enumeration(v,
                                                  {OnboardAttackMode::onboardCompromise, OnboardAttackMode::dosFlood,
                                                   OnboardAttackMode::injection, OnboardAttackMode::dataModification},
                                                  [](OnboardAttackMode m) { return toString(m); });
                 }},
                {"compromised_vehicle", [&](const YAML::Node& v) { at.compromisedVehicle = str(v); }},
                {"can_target_id", [&](const YAML::Node& v) { at.canTargetId = integer<std::uint16_t>(v); }},
                {"rate_multiplier", [&](const YAML::Node& v) { at.rateMultiplier = real(v); }},
            });
    }

    void detection(const YAML::Node& n, DetectionConfig& d) const {
        map(n, "detection",
            {
                {"gate",
                 [&](const YAML::Node& v) {
                     map(v, "gate",
                         {
                             {"nis_threshold", [&](const YAML::Node& x) { d.gate.nisThreshold = real(x); }},
                             {"window_k", [&](const YAML::Node& x) { d.gate.windowK = integer<int>(x); }},
                             {"process_noise", [&](const YAML::Node& x) { d.gate.processNoise = real(x); }},
                             {"min_confidence", [&](const YAML::Node& x) { d.gate.minConfidence = real(x); }},
                         });
                 }},
                {"plausibility",
                 [&](const YAML::Node& v) {
                     auto& p = d.plausibility;
                     map(v, "plausibility",
                         {
                             {"max_speed", [&](const YAML::Node& x) { p.maxSpeed = real(x); }},
                             {"max_abs_accel", [&](const YAML::Node& x) { p.maxAbsAccel = real(x); }},
                             {"region",
                              [&](const YAML::Node& x) {
                                  map(x, "region",
                                      {
                                          {"min_x", [&](const YAML::Node& y) { p.region.minX = real(y); }},
                                          {"max_x", [&](const YAML::Node& y) { p.region.maxX = real(y); }},
                                          {"min_y", [&](const YAML::Node& y) { p.region.minY = real(y); }},
                                          {"max_y", [&](const YAML::Node& y) { p.region.maxY = real(y); }},
                                      });
                              }},
                         });
                 }},
                {"consistency",
                 [&](const YAML::Node& v) {
                     auto& c = d.consistency;
                     map(v, "consistency",
                         {
                             {"base_gate", [&](const YAML::Node& x) { c.baseGate = real(x); }},
                             {"slack", [&](const YAML::Node& x) { c.slack = real(x); }},
                             {"teleport", [&](const YAML::Node& x) { c.teleport = real(x); }},
                         });
                 }},
                {"cross_check",
                 [&](const YAML::Node& v) {
                     auto& c = d.crossCheck;
                     map(v, "cross_check",
                         {
                             {"r_dup", [&](const YAML::Node& x) { c.rDup = real(x); }},
                             {"r_assoc", [&](const YAML::Node& x) { c.rAssoc = real(x); }},
                             {"window_k", [&](const YAML::Node& x) { c.windowK = integer<int>(x); }},
                             {"fov_margin", [&](const YAML::Node& x) { c.fovMargin = real(x); }},
                         });
                 }},
                {"cam_perception",
                 [&](const YAML::Node& v) {
                     auto& c = d.camPerception;
                     map(v, "cam_perception",
                         {
                             {"sigma_cam_speed", [&](const YAML::Node& x) { c.sigmaCamSpeed = real(x); }},
                             {"sigma_perceived_speed", [&](const YAML::Node& x) { c.sigmaPerceivedSpeed = real(x); }},
                             {"gate_sigmas", [&](const YAML::Node& x) { c.gateSigmas = real(x); }},
                             {"min_perceived_speed", [&](const YAML::Node& x) { c.minPerceivedSpeed = real(x); }},
                             {"assoc_radius", [&](const YAML::Node& x) { c.assocRadius = real(x); }},
                             {"window_k", [&](const YAML::Node& x) { c.windowK = integer<int>(x); }},
                         });
                 }},
                {"collision",
                 [&](const YAML::Node& v) {
                     auto& c = d.collision;
                     map(v, "collision",
                         {
                             {"horizon_s", [&](const YAML::Node& x) { c.horizonS = real(x); }},
                             {"d_min", [&](const YAML::Node& x) { c.dMin = real(x); }},
                             {"accel_window_s", [&](const YAML::Node& x) { c.accelWindowS = real(x); }},
                             {"min_threat_speed", [&](const YAML::Node& x) { c.minThreatSpeed = real(x); }},
                             {"min_vru_track_s", [&](const YAML::Node& x) { c.minVruTrackS = real(x); }},
                             {"clear_steps", [&](const YAML::Node& x) { c.clearSteps = integer<int>(x); }},
                         });
                 }},
                {"can",
                 [&](const YAML::Node& v) {
                     auto& c = d.can;
                     map(v, "can",
                         {
                             {"dos_share", [&](const YAML::Node& x) { c.dosShare = real(x); }},
                             {"dos_window_ms", [&](const YAML::Node& x) { c.dosWindowMs = real(x); }},
                             {"dos_min_frames", [&](const YAML::Node& x) { c.dosMinFrames = integer<std::size_t>(x); }},
                             {"injection_ratio", [&](const YAML::Node& x) { c.injectionRatio = real(x); }},
                             {"mad_k", [&](const YAML::Node& x) { c.madK = real(x); }},
                             {"mad_floor", [&](const YAML::Node& x) { c.madFloor = real(x); }},
                             {"window_ms", [&](const YAML::Node& x) { c.windowMs = real(x); }},
                             {"min_train_frames",
                              [&](const YAML::Node& x) { c.minTrainFrames = integer<std::size_t>(x); }},
                             {"min_window_intervals",
                              [&](const YAML::Node& x) { c.minWindowIntervals = integer<std::size_t>(x); }},
                         });
                 }},
            });
    }

    void mitigation(const YAML::Node& n, MitigationPolicy& policy) const {
        if (!n.IsSequence()) {
            fail(n, "mitigation must be a list of rules");
        }
        for (const auto& rule : n) {
            AgentRole role = AgentRole::vehicle;
            DetectorId detector = DetectorId::security;
            Anomaly anomaly = Anomaly::badSignature;
            std::vector<PolicyStep> steps;
            map(rule, "mitigation rule",
                {
                    {"role",
                     [&](const YAML::Node& v) {
                         role = enumeration(v, {AgentRole::vehicle, AgentRole::rsu},
                                            [](AgentRole r) { return toString(r); });
                     }},
                    {"detector",
                     [&](const YAML::Node& v) {
                         detector = parsed(v, [](std::string_view x) { return detectorFromString(x); });
                     }},
                    {"anomaly",
                     [&](const YAML::Node& v) {
                         anomaly = parsed(v, [](std::string_view x) { return anomalyFromString(x); });
                     }},
                    {"actions", [](const YAML::Node&) {}},
                });
            if (!rule["detector"] || !rule["anomaly"] || !rule["actions"]) {
                fail(rule, "mitigation rule needs detector, anomaly and actions");
            }
            const auto actions = rule["actions"];
            if (!actions.IsSequence()) {
                fail(actions, "actions must be a list");
            }
            for (const auto& a : actions) {
                PolicyStep step;
                if (a.IsScalar()) {
                    step.kind = actionKind(a);
                } else {
                    map(a, "action",
                        {
                            {"kind", [&](const YAML::Node& v) { step.kind = actionKind(v); }},
                            {"cause",
                             [&](const YAML::Node& v) {
                                 step.cause = enumeration(
                                     v,
                                     {DenmCause::maliciousCpm, DenmCause::hackedVehicle, DenmCause::hackedTrafficLight,
                                      DenmCause::vruCollision, DenmCause::onboardCompromise, DenmCause::canIntrusion},
                                     [](DenmCause c) { return toString(c); });
                             }},
                            {"target",
                             [&](const YAML::Node& v) {
                                 step.target = enumeration(v, {OverrideTarget::redYellowBlinking, OverrideTarget::allRed},
                                                           [](OverrideTarget t) { return toString(t); });
                             }},
                        });
                }
                steps.push_back(step);
            }
            policy.set(role, detector, anomaly, std::move(steps));
        }
    }

    ActionKind actionKind(const YAML::Node& v) const {
        return enumeration(v,
                           {ActionKind::broadcastDenm, ActionKind::requestLightOverride, ActionKind::hmiNotify,
                            ActionKind::purgeOwnKeys},
                           [](ActionKind k) { return toString(k); });
    }

    void can(const YAML::Node& n, Fixture& f) const {
        map(n, "can",
            {
                {"training_ms", [&](const YAML::Node& v) { f.canTrainingMs = real(v); }},
                {"schedule",
                 [&](const YAML::Node& v) {
                     list<CanScheduleEntry>(v, "can schedule", f.can.entries,
                                            [&](const YAML::Node& e, CanScheduleEntry& s) {
                                                map(e, "can schedule entry",
                                                    {
                                                        {"id",
                                                         [&](const YAML::Node& x) { s.id = integer<std::uint16_t>(x); }},
                                                        {"period_ms", [&](const YAML::Node& x) { s.periodMs = real(x); }},
                                                        {"jitter_ms", [&](const YAML::Node& x) { s.jitterMs = real(x); }},
                                                        {"payload",
                                                         [&](const YAML::Node& x) {
                                                             s.payload = parsed(x, [](const std::string& y) {
                                                                 return payloadKindFromString(y);
                                                             });
                                                         }},
                                                    });
                                            });
                 }},
            });
    }

    void fixture(const YAML::Node& n, Fixture& f) const {
        map(n, "fixture",
            {
                {"base", [](const YAML::Node&) {}},
                {"name", [&](const YAML::Node& v) { f.name = str(v); }},
                {"sim", [&](const YAML::Node& v) { sim(v, f.sim); }},
                {"intersection", [&](const YAML::Node& v) { intersection(v, f.intersection); }},
                {"light",
                 [&](const YAML::Node& v) {
                     map(v, "light",
                         {
                             {"station", [&](const YAML::Node& x) { f.light.station = integer<std::uint32_t>(x); }},
                             {"honor_probability", [&](const YAML::Node& x) { f.light.honorProbability = real(x); }},
                         });
                 }},
                {"camera", [&](const YAML::Node& v) { camera(v, f.camera); }},
                {"rsu",
                 [&](const YAML::Node& v) {
                     map(v, "rsu",
                         {
                             {"station", [&](const YAML::Node& x) { f.rsu.station = integer<std::uint32_t>(x); }},
                             {"anchor", [&](const YAML::Node& x) { f.rsu.anchor = point(x); }},
                             {"uwb_sigma", [&](const YAML::Node& x) { f.rsu.uwbSigma = real(x); }},
                             {"uwb_range", [&](const YAML::Node& x) { f.rsu.uwbRange = real(x); }},
                             {"uwb_process_noise", [&](const YAML::Node& x) { f.rsu.uwbProcessNoise = real(x); }},
                         });
                 }},
                {"actors",
                 [&](const YAML::Node& v) {
                     list<ActorSpec>(
                         v, "actors", f.actors, [&](const YAML::Node& e, ActorSpec& a) { actor(e, a); },
                         [&](const std::string& name) -> std::optional<std::size_t> {
                             for (std::size_t i = 0; i < f.actors.size(); ++i) {
                                 if (f.actors[i].name == name) {
                                     return i;
                                 }
                             }
                             return std::nullopt;
                         });
                 }},
                {"attack", [&](const YAML::Node& v) { attack(v, f.attack); }},
                {"detection", [&](const YAML::Node& v) { detection(v, f.detection); }},
                {"mitigation", [&](const YAML::Node& v) { mitigation(v, f.policy); }},
                {"can", [&](const YAML::Node& v) { can(v, f); }},
            });
    }

private:
    std::string source_;
};

YAML::Node parse(const std::string& text, const std::string& source) {
    try {
        auto node = YAML::Load(text);
        if (node.IsNull()) {
            throw FixtureError(source, 0, 0, "empty fixture");
        }
        if (!node.IsMap()) {
            throw FixtureError(source, node.Mark().line + 1, node.Mark().column + 1, "fixture must be a mapping");
        }
        return node;
    } catch (const YAML::ParserException& e) {
        throw FixtureError(source, e.mark.line + 1, e.mark.column + 1, e.msg);
    }
}

std::string readFile(const std::filesystem::path& path, const std::string& from) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FixtureError(from, 0, 0, "cannot read fixture '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void applyFile(const std::filesystem::path& path, Fixture& f, std::vector<std::filesystem::path>& chain,
               const std::string& from) {
    const auto canonical = std::filesystem::weakly_canonical(path);
    for (const auto& seen : chain) {
        if (seen == canonical) {
            throw FixtureError(from, 0, 0, "base include cycle through '" + path.string() + "'");
        }
    }
    chain.push_back(canonical);
    const auto source = path.string();
    const auto node = parse(readFile(path, from), source);
    Layer layer(source);
    if (const auto base = node["base"]) {
        const auto rel = layer.str(base);
        applyFile(path.parent_path() / rel, f, chain, source);
    }
    layer.fixture(node, f);
    chain.pop_back();
}

// sim.seed=5 -> {sim: {seed: 5}}
YAML::Node overrideNode(const Override& o, const std::string& source) {
    YAML::Node value;
    try {
        value = YAML::Load(o.value);
    } catch (const YAML::ParserException& e) {
        throw FixtureError(source, 0, 0, "bad value: " + e.msg);
    }
    std::vector<std::string> parts;
    std::string key = o.key == "seed" ? "sim.seed" : o.key;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        parts.push_back(key.substr(start, dot - start));
        if (dot == std::string::npos) {
            break;
        }
        start = dot + 1;
    }
    for (const auto& p : parts) {
        if (p.empty()) {
            throw FixtureError(source, 0, 0, "malformed key '" + o.key + "'");
        }
    }
    YAML::Node node = value;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        YAML::Node parent(YAML::NodeType::Map);
        parent[*it] = node;
        node = parent;
    }
    return node;
}

void finish(Fixture& f, const std::string& source, const LoadOptions& options) {
    if (options.envSeed) {
        Layer env("V2X_SENTINEL_SEED");
        f.sim.seed = env.u64(YAML::Node(*options.envSeed));
    }
    for (const auto& o : options.overrides) {
        const auto src = "--set " + o.key + "=" + o.value;
        Layer(src).fixture(overrideNode(o, src), f);
    }
    try {
        validate(f);
    } catch (const std::exception& e) {
        throw FixtureError(source, 0, 0, e.what());
    }
}

}  // namespace

Override parseOverride(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw FixtureError("--set " + text, 0, 0, "expected key=value");
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

std::optional<std::string> seedFromEnvironment() {
    if (const char* s = std::getenv("V2X_SENTINEL_SEED"); s && *s) {
        return std::string(s);
    }
    return std::nullopt;
}

std::filesystem::path resolveFixturePath(const std::filesystem::path& path) {
    if (std::filesystem::is_regular_file(path)) {
        return path;
    }
    auto withExt = path;
    withExt += ".yaml";
    if (std::filesystem::is_regular_file(withExt)) {
        return withExt;
    }
    return path;
}

Fixture loadFixture(const std::filesystem::path& path, const LoadOptions& options) {
    const auto resolved = resolveFixturePath(path);
    Fixture f;
    std::vector<std::filesystem::path> chain;
    applyFile(resolved, f, chain, resolved.string());
    if (f.name.empty()) {
        f.name = resolved.stem().string();
    }
    finish(f, resolved.string(), options);
    return f;
}

Fixture loadFixtureText(const std::string& text, const std::string& sourceName, const LoadOptions& options) {
    const auto node = parse(text, sourceName);
    if (node["base"]) {
        throw FixtureError(sourceName, node["base"].Mark().line + 1, node["base"].Mark().column + 1,
                           "base includes need a file path; use loadFixture");
    }
    Fixture f;
    Layer(sourceName).fixture(node, f);
    finish(f, sourceName, options);
    return f;
}

}  // namespace sentinel
