#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>

namespace sentinel {

// Chi-square quantile; used for the default NIS gate.
double chiSquareQuantile(double probability, double dof);

struct GateConfig {
    double nisThreshold = chiSquareQuantile(0.99, 2.0);
    int windowK = 3;
    double processNoise = 0.5;  // white-noise acceleration density, m^2/s^3
    double minConfidence = 0.9;  // CPM objects below this are tracker predictions, not measurements
};

void validate(const GateConfig& cfg);

// Constant-velocity state (px, py, vx, vy).
struct EkfState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
    std::uint64_t lastTimeMs = 0;
};

enum class MeasurementKind : std::uint8_t { position, velocity };

EkfState ekfInit(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity, double positionVar,
                 double velocityVar, std::uint64_t timeMs);

// Throws InvariantViolation if toTimeMs < lastTimeMs, NonPositiveDefinite if the covariance breaks.
EkfState ekfPredict(const EkfState& state, std::uint64_t toTimeMs, double q);

struct EkfUpdate {
    EkfState state;
    double nis = 0.0;
};

// Kalman update for a 2-vector measurement of position or velocity.
// Throws SingularInnovation when S is not invertible.
EkfUpdate ekfUpdate(const EkfState& state, const Eigen::Vector2d& z, const Eigen::Matrix2d& R,
                    MeasurementKind kind = MeasurementKind::position);

// NIS of a measurement against the state without updating it.
double ekfNis(const EkfState& state, const Eigen::Vector2d& z, const Eigen::Matrix2d& R,
              MeasurementKind kind = MeasurementKind::position);

bool covarianceHealthy(const Eigen::Matrix4d& P, double tol = 1e-9);

// Streaming K-consecutive gate; fires once per run of exceedances, on its K-th element.
class NisGate {
public:
    explicit NisGate(GateConfig cfg = {}) : cfg_(cfg) {}

    bool observe(double nis);
    int run() const { return run_; }
    void reset() { run_ = 0; }

private:
    GateConfig cfg_;
    int run_ = 0;
};

// Index of the update at which the gate first fires.
std::optional<std::size_t> ekfGate(std::span<const double> nisSequence, const GateConfig& cfg);

}  // namespace sentinel
