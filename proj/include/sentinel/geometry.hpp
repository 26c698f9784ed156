#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sentinel/messages.hpp"

namespace sentinel {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }

    friend bool operator==(Vec2, Vec2) = default;
};

using Polyline = std::vector<Vec2>;

// Closed-segment test: touching endpoints and collinear overlap count as intersecting.
bool segmentsIntersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);
bool polylinesIntersect(const Polyline& a, const Polyline& b);

// Arc-length parameterised path for actors that follow lanes or walking routes.
class Path {
public:
    Path() = default;
    explicit Path(Polyline points);

    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    Vec2 pointAt(double s) const;
    double headingAt(double s) const;
    const Polyline& points() const { return points_; }

private:
    std::size_t segmentAt(double s) const;

    Polyline points_;
    std::vector<double> cumulative_;
};

// Corner cutting; endpoints are kept.
Polyline chaikin(const Polyline& line, int iterations);

class ConflictMatrix {
public:
    ConflictMatrix() = default;
    explicit ConflictMatrix(std::vector<std::uint8_t> groups);

    std::size_t size() const { return groups_.size(); }
    const std::vector<std::uint8_t>& groups() const { return groups_; }
    bool contains(std::uint8_t group) const { return indexOf(group).has_value(); }

    // Throws UnknownSignalGroup for groups not in the matrix.
    bool conflicts(std::uint8_t a, std::uint8_t b) const;
    void set(std::uint8_t a, std::uint8_t b, bool value);

private:
    std::optional<std::size_t> indexOf(std::uint8_t group) const;
    std::size_t at(std::uint8_t group) const;

    std::vector<std::uint8_t> groups_;
    std::vector<bool> cells_;
};

// Groups in `declaredGroups` that govern no lane raise MalformedTopology, as do lanes
// without a centerline of at least two points.
ConflictMatrix buildConflictMatrix(const MapPayload& map, const std::map<std::uint16_t, Polyline>& centerlines,
                                   std::span<const std::uint8_t> declaredGroups = {});

// Free-space constant-acceleration integration along the heading; speed is clamped at zero,
// in which case motion stops at the instant the speed reaches zero.
KinematicState integrate(const KinematicState& state, double dt);

// One-dimensional version used by path-following actors: returns advanced distance and new speed.
struct LongitudinalStep {
    double distance = 0.0;
    double speed = 0.0;
};
LongitudinalStep advance(double speed, double accel, double dt);

}  // namespace sentinel
