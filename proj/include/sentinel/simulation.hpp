#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/agents.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/trace.hpp"
#include "sentinel/world.hpp"

namespace sentinel {

// One deterministic run of a fixture. Phases of a step:
//  1. physics (spawn, integrate, retire)
//  2. bus delivery of due events
//  3. traffic light: resolve override requests, emit SPaT (also handed to the RSU over its wired link)
//  4. roadside camera capture, 5. UWB fixes
//  6. agent ticks in ascending StationId, then DENM repetitions
//  7. state event
class Simulation final : public AgentHost {
public:
    explicit Simulation(Fixture fixture);

    void advance();
    void run();
    bool finished() const { return step_ >= fixture_.sim.steps(); }

    const Fixture& fixture() const { return fixture_; }
    const TraceWriter& trace() const { return trace_; }
    std::optional<std::uint64_t> onsetStep() const;

    const std::vector<VehicleAgent>& vehicles() const { return vehicles_; }
    const std::vector<VruAgent>& vrus() const { return vrus_; }
    const RsuAgent& rsu() const { return *rsu_; }
    const TrafficLight& light() const { return light_; }
    const AgentCore& lightCore() const { return lightCore_; }
    const ConflictMatrix& conflicts() const { return conflicts_; }
    StationId stationOf(const std::string& actorName) const;
    std::size_t reportCount() const { return reportSeq_; }

    // AgentHost
    std::uint64_t step() const override { return step_; }
    std::uint64_t nowMs() const override { return step_ * fixture_.sim.stepMs; }
    double dtS() const override { return fixture_.sim.stepMs / 1000.0; }
    const Verifier& verifier() const override { return verifier_; }
    std::span<const PhysicalActor> actors() const override { return actors_; }
    SignalPhase physicalSignal(std::uint8_t group) const override { return light_.physical(group, nowMs()); }
    void received(const AgentCore& receiver, const Envelope& env, VerifyResult verdict, bool accepted,
                  const std::string* hmi) override;
    EnvelopePtr transmit(AgentCore& from, const Payload& payload) override;
    void rebroadcast(AgentCore& from, const EnvelopePtr& env) override;
    void notify(AgentCore& from, DetectionReport report) override;

private:
    struct TickEntry {
        StationId station;
        enum class Kind { vehicle, rsu, vru } kind;
        std::size_t index;
    };

    bool attackActive() const;
    void startAttacks();
    void lightTick();
    void refreshActors();
    void repeatDenms(AgentCore& core);
    KinematicState stateOf(const AgentCore& core) const;
    void executeDenm(AgentCore& from, const DetectionReport& report, DenmCause cause, std::uint64_t reportId,
                     ActionKind kind);
    void writeHeader();
    void writeState(const std::vector<std::pair<StationId, SignalState>>& crossings);

    Fixture fixture_;
    std::uint64_t step_ = 0;
    TraceWriter trace_;

    std::optional<CertificateAuthority> root_;
    std::optional<CertificateAuthority> pseudonymCa_;
    Verifier verifier_;
    Bus bus_;
    ConflictMatrix conflicts_;
    TrafficLight light_;
    AgentCore lightCore_;
    CameraSensor camera_;
    Rng uwbRng_;
    Rng lightRng_;

    std::vector<VehicleAgent> vehicles_;
    std::vector<VruAgent> vrus_;
    std::optional<RsuAgent> rsu_;
    std::vector<std::pair<ActorKind, std::size_t>> actorSlots_;  // fixture index -> (kind, position)
    std::vector<TickEntry> tickOrder_;
    std::vector<PhysicalActor> actors_;
    std::vector<EnvelopePtr> spatLink_;
    std::vector<SignalState> lastBroadcast_;
    std::size_t reportSeq_ = 0;
    bool hijackDone_ = false;
};

}  // namespace sentinel
