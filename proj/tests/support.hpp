#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <string>

#include "sentinel/fixture.hpp"
#include "sentinel/messages.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/simulation.hpp"

namespace sentinel::testing {

inline std::filesystem::path& scenarioDir() {
    static std::filesystem::path dir = SENTINEL_SCENARIO_DIR;
    return dir;
}

inline std::filesystem::path scenarioPath(const std::string& name) { return scenarioDir() / (name + ".yaml"); }

inline Fixture scenario(const std::string& name, std::optional<std::uint64_t> seed = std::nullopt) {
    LoadOptions opts;
    if (seed) {
        opts.overrides.push_back({"sim.seed", std::to_string(*seed)});
    }
    return loadFixture(scenarioPath(name), opts);
}

inline std::string runTrace(Fixture f) {
    Simulation sim(std::move(f));
    sim.run();
    return sim.trace().text();
}

// Events of one kind, header skipped.
inline std::vector<OrderedJson> events(const std::string& trace, const std::string& kind) {
    std::vector<OrderedJson> out;
    std::istringstream in(trace);
    std::string line;
    std::getline(in, line);
    const std::string needle = "{\"kind\":\"" + kind + "\"";
    while (std::getline(in, line)) {
        if (line.rfind(needle, 0) == 0) {
            out.push_back(OrderedJson::parse(line));
        }
    }
    return out;
}

inline std::map<std::uint32_t, std::string> namesOf(const std::string& trace) {
    const auto header = OrderedJson::parse(trace.substr(0, trace.find('\n')));
    std::map<std::uint32_t, std::string> out;
    for (const auto& a : header["actors"]) {
        out[a["station"].get<std::uint32_t>()] = a["name"].get<std::string>();
    }
    return out;
}

using DetectionKey = std::tuple<std::uint64_t, std::string, std::string, std::string, std::string>;

// (step, reporter, detector, anomaly, offender) with stations replaced by actor names.
inline std::multiset<DetectionKey> detectionsByName(const std::string& trace) {
    const auto names = namesOf(trace);
    std::multiset<DetectionKey> out;
    for (const auto& e : events(trace, "detection")) {
        std::string offender = "-";
        if (e["offender"].contains("station")) {
            const auto id = e["offender"]["station"].get<std::uint32_t>();
            offender = names.count(id) ? names.at(id) : std::to_string(id);
        } else if (e["offender"].contains("can_id")) {
            offender = e["offender"]["can_id"].dump();
        }
        out.insert({e["step"].get<std::uint64_t>(), names.at(e["station"].get<std::uint32_t>()),
                    e["detector"].get<std::string>(), e["anomaly"].get<std::string>(), offender});
    }
    return out;
}

// Random payloads that satisfy their type invariants.
class PayloadGen {
public:
    explicit PayloadGen(std::uint64_t seed) : rng_(seed) {}

    KinematicState state() {
        return {rng_.uniform(-kRegionHalfWidth, kRegionHalfWidth), rng_.uniform(-kRegionHalfWidth, kRegionHalfWidth),
                rng_.uniform(0.0, 6.283185307179586) * 0.999999, rng_.uniform(0.0, kMaxSpeed),
                rng_.uniform(-kMaxAbsAccel, kMaxAbsAccel)};
    }
    StationId station() { return {static_cast<std::uint32_t>(1 + rng_.bits() % 0xFFFFFFF0ULL)}; }
    std::uint64_t time() { return rng_.bits() >> 20; }
    std::size_t upTo(std::size_t n) { return static_cast<std::size_t>(rng_.bits() % (n + 1)); }

    CamPayload cam() { return {station(), state(), time()}; }

    CpmPayload cpm() {
        CpmPayload p;
        p.sender = station();
        p.sensorFov = {rng_.uniform(-50, 50), rng_.uniform(-50, 50), rng_.uniform(0, 6.28), rng_.uniform(10, 200),
                       rng_.uniform(0.1, 3.14159)};
        const auto n = upTo(6);
        for (std::size_t i = 0; i < n; ++i) {
            PerceivedObject o;
            o.objectId = static_cast<std::uint16_t>(i * 1000 + rng_.bits() % 1000);
            // inside the declared view
            const double r = rng_.uniform(0.0, p.sensorFov.range * 0.9);
            const double a = p.sensorFov.orientation + rng_.uniform(-0.9, 0.9) * p.sensorFov.halfAngle;
            o.state = state();
            o.state.x = p.sensorFov.originX + r * std::cos(a);
            o.state.y = p.sensorFov.originY + r * std::sin(a);
            o.confidence = rng_.uniform();
            o.classification = static_cast<ObjectClass>(rng_.bits() % 4);
            p.objects.push_back(o);
        }
        p.genTime = time();
        return p;
    }

    DenmPayload denm() {
        DenmPayload p;
        p.sender = station();
        p.cause = static_cast<DenmCause>(rng_.bits() % 6);
        p.eventState = state();
        p.offender = rng_.bernoulli(0.5) ? station() : StationId{};
        for (auto& b : p.evidenceDigest) {
            b = static_cast<std::uint8_t>(rng_.bits());
        }
        p.genTime = time();
        return p;
    }

    SpatPayload spat() {
        SpatPayload p;
        p.sender = station();
        std::uint8_t g = static_cast<std::uint8_t>(1 + rng_.bits() % 4);
        const auto n = upTo(8);
        for (std::size_t i = 0; i < n; ++i) {
            p.phases.push_back({g, static_cast<SignalState>(rng_.bits() % 4), static_cast<std::uint32_t>(rng_.bits())});
            g = static_cast<std::uint8_t>(g + 1 + rng_.bits() % 3);
        }
        p.genTime = time();
        return p;
    }

    MapPayload map() {
        MapPayload p;
        p.sender = station();
        std::uint16_t id = static_cast<std::uint16_t>(1 + rng_.bits() % 10);
        const auto n = upTo(12);
        for (std::size_t i = 0; i < n; ++i) {
            p.lanes.push_back({id, static_cast<Approach>(rng_.bits() % 4), static_cast<Approach>(rng_.bits() % 4),
                               static_cast<std::uint8_t>(1 + rng_.bits() % 16)});
            id = static_cast<std::uint16_t>(id + 1 + rng_.bits() % 5);
        }
        return p;
    }

    Payload any() {
        switch (rng_.bits() % 5) {
            case 0: return cam();
            case 1: return cpm();
            case 2: return denm();
            case 3: return spat();
            default: return map();
        }
    }

    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

}  // namespace sentinel::testing
