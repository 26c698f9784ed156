#include "sentinel/ekf.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <string>

#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

Eigen::Matrix<double, 2, 4> selector(MeasurementKind kind) {
    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    const int offset = kind == MeasurementKind::position ? 0 : 2;
    H(0, offset) = 1.0;
    H(1, offset + 1) = 1.0;
    return H;
}

Eigen::Matrix2d innovationCovariance(const EkfState& s, const Eigen::Matrix2d& R, MeasurementKind kind) {
    const auto H = selector(kind);
    Eigen::Matrix2d S = H * s.P * H.transpose() + R;
    return 0.5 * (S + S.transpose());
}

Eigen::Matrix2d invertInnovation(const Eigen::Matrix2d& S) {
    const double det = S.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
        throw SingularInnovation("innovation covariance not invertible (det " + std::to_string(det) + ")");
    }
    return S.inverse();
}

}  // namespace

double chiSquareQuantile(double probability, double dof) {
    return boost::math::quantile(boost::math::chi_squared(dof), probability);
}

void validate(const GateConfig& cfg) {
    if (!(cfg.nisThreshold > 0.0)) {
        throw InvariantViolation("nisThreshold must be positive");
    }
    if (cfg.windowK < 1) {
        throw InvariantViolation("windowK must be at least 1");
    }
    if (!(cfg.minConfidence >= 0.0 && cfg.minConfidence <= 1.0)) {
        throw InvariantViolation("minConfidence must lie in [0, 1]");
    }
    if (!(cfg.processNoise >= 0.0)) {
        throw InvariantViolation("processNoise must be non-negative");
    }
}

EkfState ekfInit(const Eigen::Vector2d& position, const Eigen::Vector2d& velocity, double positionVar,
                 double velocityVar, std::uint64_t timeMs) {
    EkfState s;
    s.x << position, velocity;
    s.P = Eigen::Matrix4d::Zero();
    s.P.diagonal() << positionVar, positionVar, velocityVar, velocityVar;
    s.lastTimeMs = timeMs;
    return s;
}

bool covarianceHealthy(const Eigen::Matrix4d& P, double tol) {
    if (!P.allFinite() || (P - P.transpose()).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(P);
    return eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0;
}

EkfState ekfPredict(const EkfState& state, std::uint64_t toTimeMs, double q) {
    if (toTimeMs < state.lastTimeMs) {
        throw InvariantViolation("ekfPredict into the past");
    }
    if (toTimeMs == state.lastTimeMs) {
        return state;
    }
    const double dt = static_cast<double>(toTimeMs - state.lastTimeMs) / 1000.0;
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = dt;
    F(1, 3) = dt;
    const double dt2 = dt * dt;
    const double dt3 = dt2 * dt;
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    Q(0, 0) = Q(1, 1) = dt3 / 3.0 * q;
    Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = dt2 / 2.0 * q;
    Q(2, 2) = Q(3, 3) = dt * q;

    EkfState out;
    out.x = F * state.x;
    out.P = F * state.P * F.transpose() + Q;
    out.P = 0.5 * (out.P + out.P.transpose());
    out.lastTimeMs = toTimeMs;
    if (!covarianceHealthy(out.P)) {
        throw NonPositiveDefinite("predicted covariance is not symmetric positive definite");
    }
    return out;
}

double ekfNis(const EkfState& state, const Eigen::Vector2d& z, const Eigen::Matrix2d& R, MeasurementKind kind) {
    const Eigen::Vector2d y = z - selector(kind) * state.x;
    const Eigen::Matrix2d Sinv = invertInnovation(innovationCovariance(state, R, kind));
    return y.dot(Sinv * y);
}

EkfUpdate ekfUpdate(const EkfState& state, const Eigen::Vector2d& z, const Eigen::Matrix2d& R, MeasurementKind kind) {
    const auto H = selector(kind);
    const Eigen::Vector2d y = z - H * state.x;
    const Eigen::Matrix2d Sinv = invertInnovation(innovationCovariance(state, R, kind));
    const Eigen::Matrix<double, 4, 2> K = state.P * H.transpose() * Sinv;

    EkfUpdate out;
    out.nis = y.dot(Sinv * y);
    out.state.x = state.x + K * y;
    // Joseph form keeps P positive definite under rounding
    const Eigen::Matrix4d I_KH = Eigen::Matrix4d::Identity() - K * H;
    out.state.P = I_KH * state.P * I_KH.transpose() + K * R * K.transpose();
    out.state.P = 0.5 * (out.state.P + out.state.P.transpose());
    out.state.lastTimeMs = state.lastTimeMs;
    return out;
}

bool NisGate::observe(double nis) {
    if (nis > cfg_.nisThreshold) {
        ++run_;
        return run_ == cfg_.windowK;
    }
    run_ = 0;
    return false;
}

std::optional<std::size_t> ekfGate(std::span<const double> nisSequence, const GateConfig& cfg) {
    NisGate gate(cfg);
    for (std::size_t i = 0; i < nisSequence.size(); ++i) {
        if (gate.observe(nisSequence[i])) {
            return i;
        }
    }
    return std::nullopt;
}

}  // namespace sentinel
