#include "sentinel/messages.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "sentinel/wire.hpp"

namespace sentinel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* what) {
    if (!ok) {
        throw InvariantViolation(what);
    }
}

void validateSender(StationId id) { require(id.known(), "sender must not be station 0"); }

void validateFov(const FieldOfView& fov) {
    require(std::isfinite(fov.originX) && std::isfinite(fov.originY), "fov origin not finite");
    require(std::abs(fov.originX) <= kRegionHalfWidth && std::abs(fov.originY) <= kRegionHalfWidth,
            "fov origin outside region");
    require(std::isfinite(fov.orientation) && fov.orientation >= 0.0 && fov.orientation < kTwoPi,
            "fov orientation outside [0, 2pi)");
    require(std::isfinite(fov.range) && fov.range > 0.0, "fov range must be positive");
    require(std::isfinite(fov.halfAngle) && fov.halfAngle > 0.0 && fov.halfAngle <= std::numbers::pi,
            "fov half-angle outside (0, pi]");
}

template <typename E>
E checkedEnum(std::uint8_t raw, std::uint8_t count, const char* what) {
    if (raw >= count) {
        throw InvariantViolation(std::string("unknown ") + what + " value " + std::to_string(raw));
    }
    return static_cast<E>(raw);
}

void put(wire::Writer& w, const KinematicState& s) {
    w.f64(s.x);
    w.f64(s.y);
    w.f64(s.heading);
    w.f64(s.speed);
    w.f64(s.accel);
}

KinematicState getState(wire::Reader& r) {
    KinematicState s;
    s.x = r.f64();
    s.y = r.f64();
    s.heading = r.f64();
    s.speed = r.f64();
    s.accel = r.f64();
    return s;
}

void put(wire::Writer& w, const CamPayload& p) {
    w.u32(p.sender.value);
    put(w, p.state);
    w.u64(p.genTime);
}

void put(wire::Writer& w, const CpmPayload& p) {
    w.u32(p.sender.value);
    w.f64(p.sensorFov.originX);
    w.f64(p.sensorFov.originY);
    w.f64(p.sensorFov.orientation);
    w.f64(p.sensorFov.range);
    w.f64(p.sensorFov.halfAngle);
    w.count(p.objects.size());
    for (const auto& o : p.objects) {
        w.u16(o.objectId);
        put(w, o.state);
        w.f64(o.confidence);
        w.u8(static_cast<std::uint8_t>(o.classification));
    }
    w.u64(p.genTime);
}

void put(wire::Writer& w, const DenmPayload& p) {
    w.u32(p.sender.value);
    w.u8(static_cast<std::uint8_t>(p.cause));
    put(w, p.eventState);
    w.u32(p.offender.value);
    w.raw(p.evidenceDigest);
    w.u64(p.genTime);
}

void put(wire::Writer& w, const SpatPayload& p) {
    w.u32(p.sender.value);
    w.count(p.phases.size());
    for (const auto& ph : p.phases) {
        w.u8(ph.signalGroup);
        w.u8(static_cast<std::uint8_t>(ph.state));
        w.u32(ph.timeToChangeMs);
    }
    w.u64(p.genTime);
}

void put(wire::Writer& w, const MapPayload& p) {
    w.u32(p.sender.value);
    w.count(p.lanes.size());
    for (const auto& l : p.lanes) {
        w.u16(l.laneId);
        w.u8(static_cast<std::uint8_t>(l.ingress));
        w.u8(static_cast<std::uint8_t>(l.egress));
        w.u8(l.signalGroup);
    }
}

CamPayload getCam(wire::Reader& r) {
    CamPayload p;
    p.sender.value = r.u32();
    p.state = getState(r);
    p.genTime = r.u64();
    return p;
}

CpmPayload getCpm(wire::Reader& r) {
    CpmPayload p;
    p.sender.value = r.u32();
    p.sensorFov.originX = r.f64();
    p.sensorFov.originY = r.f64();
    p.sensorFov.orientation = r.f64();
    p.sensorFov.range = r.f64();
    p.sensorFov.halfAngle = r.f64();
    const auto n = r.u16();
    p.objects.reserve(std::min<std::size_t>(n, kMaxCpmObjects + 1));
    for (std::size_t i = 0; i < n; ++i) {
        PerceivedObject o;
        o.objectId = r.u16();
        o.state = getState(r);
        o.confidence = r.f64();
        o.classification = checkedEnum<ObjectClass>(r.u8(), 4, "object class");
        p.objects.push_back(o);
    }
    p.genTime = r.u64();
    return p;
}

DenmPayload getDenm(wire::Reader& r) {
    DenmPayload p;
    p.sender.value = r.u32();
    p.cause = checkedEnum<DenmCause>(r.u8(), 6, "DENM cause");
    p.eventState = getState(r);
    p.offender.value = r.u32();
    p.evidenceDigest = r.array<32>();
    p.genTime = r.u64();
    return p;
}

SpatPayload getSpat(wire::Reader& r) {
    SpatPayload p;
    p.sender.value = r.u32();
    const auto n = r.u16();
    for (std::size_t i = 0; i < n; ++i) {
        SignalPhase ph;
        ph.signalGroup = r.u8();
        ph.state = checkedEnum<SignalState>(r.u8(), 4, "signal state");
        ph.timeToChangeMs = r.u32();
        p.phases.push_back(ph);
    }
    p.genTime = r.u64();
    return p;
}

MapPayload getMap(wire::Reader& r) {
    MapPayload p;
    p.sender.value = r.u32();
    const auto n = r.u16();
    for (std::size_t i = 0; i < n; ++i) {
        LaneConnection l;
        l.laneId = r.u16();
        l.ingress = checkedEnum<Approach>(r.u8(), 4, "approach");
        l.egress = checkedEnum<Approach>(r.u8(), 4, "approach");
        l.signalGroup = r.u8();
        p.lanes.push_back(l);
    }
    return p;
}

}  // namespace

double normalizeHeading(double radians) {
    double h = std::fmod(radians, kTwoPi);
    if (h < 0.0) {
        h += kTwoPi;
    }
    // fmod of a tiny negative can round back up to exactly 2pi
    if (h >= kTwoPi) {
        h = 0.0;
    }
    return h;
}

double angleDiff(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d > std::numbers::pi) {
        d -= kTwoPi;
    } else if (d <= -std::numbers::pi) {
        d += kTwoPi;
    }
    return d;
}

bool FieldOfView::contains(double x, double y, double margin) const {
    const double dx = x - originX;
    const double dy = y - originY;
    const double dist = std::hypot(dx, dy);
    if (dist > range + margin) {
        return false;
    }
    if (halfAngle >= std::numbers::pi) {
        return true;
    }
    if (dist == 0.0) {
        return margin >= 0.0;
    }
    const double off = std::abs(angleDiff(std::atan2(dy, dx), orientation));
    if (off <= halfAngle) {
        if (margin >= 0.0) {
            return true;
        }
        // distance to the nearer boundary ray must cover the shrink margin
        return dist * std::sin(std::min(halfAngle - off, std::numbers::pi / 2)) >= -margin;
    }
    return margin > 0.0 && dist * std::sin(std::min(off - halfAngle, std::numbers::pi / 2)) <= margin;
}

MessageType typeOf(const Payload& payload) {
    static constexpr MessageType kTypes[] = {MessageType::cam, MessageType::cpm, MessageType::denm,
                                             MessageType::spat, MessageType::map};
    return kTypes[payload.index()];
}

std::string_view toString(MessageType type) {
    switch (type) {
        case MessageType::cam: return "CAM";
        case MessageType::cpm: return "CPM";
        case MessageType::denm: return "DENM";
        case MessageType::spat: return "SPAT";
        case MessageType::map: return "MAP";
        case MessageType::certificate: return "CERT";
        case MessageType::signedMessage: return "SIGNED";
    }
    return "?";
}

std::string_view toString(DenmCause cause) {
    switch (cause) {
        case DenmCause::maliciousCpm: return "maliciousCpm";
        case DenmCause::hackedVehicle: return "hackedVehicle";
        case DenmCause::hackedTrafficLight: return "hackedTrafficLight";
        case DenmCause::vruCollision: return "vruCollision";
        case DenmCause::onboardCompromise: return "onboardCompromise";
        case DenmCause::canIntrusion: return "canIntrusion";
    }
    return "?";
}

std::string_view toString(SignalState state) {
    switch (state) {
        case SignalState::red: return "red";
        case SignalState::yellow: return "yellow";
        case SignalState::green: return "green";
        case SignalState::redYellowBlinking: return "redYellowBlinking";
    }
    return "?";
}

std::string_view toString(ObjectClass cls) {
    switch (cls) {
        case ObjectClass::vehicle: return "vehicle";
        case ObjectClass::pedestrian: return "pedestrian";
        case ObjectClass::cyclist: return "cyclist";
        case ObjectClass::unknown: return "unknown";
    }
    return "?";
}

std::string_view toString(Approach approach) {
    switch (approach) {
        case Approach::N: return "N";
        case Approach::E: return "E";
        case Approach::S: return "S";
        case Approach::W: return "W";
    }
    return "?";
}

void validate(const KinematicState& s) {
    require(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.heading) &&
                std::isfinite(s.speed) && std::isfinite(s.accel),
            "kinematic state has non-finite field");
    require(std::abs(s.x) <= kRegionHalfWidth && std::abs(s.y) <= kRegionHalfWidth,
            "position outside simulation region");
    require(s.heading >= 0.0 && s.heading < kTwoPi, "heading outside [0, 2pi)");
    require(s.speed >= 0.0 && s.speed <= kMaxSpeed, "speed outside [0, 100]");
    require(std::abs(s.accel) <= kMaxAbsAccel, "|accel| above 20");
}

void validate(const CamPayload& p) {
    validateSender(p.sender);
    validate(p.state);
}

void validate(const CpmPayload& p) {
    validateSender(p.sender);
    validateFov(p.sensorFov);
    require(p.objects.size() <= kMaxCpmObjects, "more than 128 perceived objects");
    std::set<std::uint16_t> ids;
    for (const auto& o : p.objects) {
        validate(o.state);
        require(o.confidence >= 0.0 && o.confidence <= 1.0, "confidence outside [0, 1]");
        require(static_cast<std::uint8_t>(o.classification) < 4, "unknown object class");
        require(p.sensorFov.contains(o.state.x, o.state.y), "perceived object outside sensor FoV");
        require(ids.insert(o.objectId).second, "duplicate object id");
    }
}

void validate(const DenmPayload& p) {
    validateSender(p.sender);
    require(static_cast<std::uint8_t>(p.cause) < 6, "unknown DENM cause");
    validate(p.eventState);
}

void validate(const SpatPayload& p) {
    validateSender(p.sender);
    std::set<std::uint8_t> groups;
    for (const auto& ph : p.phases) {
        require(static_cast<std::uint8_t>(ph.state) < 4, "unknown signal state");
        require(groups.insert(ph.signalGroup).second, "signal group repeated in SPaT");
    }
}

void validate(const MapPayload& p) {
    validateSender(p.sender);
    std::set<std::uint16_t> ids;
    for (const auto& l : p.lanes) {
        require(static_cast<std::uint8_t>(l.ingress) < 4 && static_cast<std::uint8_t>(l.egress) < 4,
                "unknown approach");
        require(ids.insert(l.laneId).second, "duplicate lane id");
    }
}

void validate(const Payload& payload) {
    std::visit([](const auto& p) { validate(p); }, payload);
}

Bytes encode(const Payload& payload) {
    validate(payload);
    wire::Writer w;
    w.u8(static_cast<std::uint8_t>(typeOf(payload)));
    std::visit([&](const auto& p) { put(w, p); }, payload);
    return w.take();
}

MessageType peekType(ByteView bytes) {
    if (bytes.empty()) {
        throw MalformedMessage("empty message");
    }
    return static_cast<MessageType>(bytes[0]);
}

Payload decode(ByteView bytes) {
    wire::Reader r(bytes);
    if (bytes.empty()) {
        throw MalformedMessage("empty message");
    }
    const auto tag = r.u8();
    Payload out;
    switch (static_cast<MessageType>(tag)) {
        case MessageType::cam: out = getCam(r); break;
        case MessageType::cpm: out = getCpm(r); break;
        case MessageType::denm: out = getDenm(r); break;
        case MessageType::spat: out = getSpat(r); break;
        case MessageType::map: out = getMap(r); break;
        default: throw MalformedMessage("unknown type tag " + std::to_string(tag));
    }
    r.finish();
    validate(out);
    return out;
}

}  // namespace sentinel
