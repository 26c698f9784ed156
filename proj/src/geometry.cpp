#include "sentinel/geometry.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace sentinel {

namespace {

constexpr double kEps = 1e-12;

int orientation(Vec2 a, Vec2 b, Vec2 c) {
    const double v = (b - a).cross(c - a);
    if (std::abs(v) <= kEps) {
        return 0;
    }
    return v > 0 ? 1 : -1;
}

bool onSegment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) - kEps <= p.x && p.x <= std::max(a.x, b.x) + kEps &&
           std::min(a.y, b.y) - kEps <= p.y && p.y <= std::max(a.y, b.y) + kEps;
}

}  // namespace

bool segmentsIntersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && onSegment(p1, p2, q1)) || (o2 == 0 && onSegment(p1, p2, q2)) ||
           (o3 == 0 && onSegment(q1, q2, p1)) || (o4 == 0 && onSegment(q1, q2, p2));
}

bool polylinesIntersect(const Polyline& a, const Polyline& b) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            if (segmentsIntersect(a[i], a[i + 1], b[j], b[j + 1])) {
                return true;
            }
        }
    }
    return false;
}

Path::Path(Polyline points) : points_(std::move(points)) {
    cumulative_.reserve(points_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i > 0) {
            total += (points_[i] - points_[i - 1]).norm();
        }
        cumulative_.push_back(total);
    }
}

std::size_t Path::segmentAt(double s) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    idx = std::min(idx, points_.size() - 2);
    // skip zero-length segments
    while (idx + 2 < points_.size() && cumulative_[idx + 1] - cumulative_[idx] <= 0.0) {
        ++idx;
    }
    return idx;
}

Vec2 Path::pointAt(double s) const {
    if (points_.size() == 1) {
        return points_[0];
    }
    s = std::clamp(s, 0.0, length());
    const auto i = segmentAt(s);
    const double segLen = cumulative_[i + 1] - cumulative_[i];
    if (segLen <= 0.0) {
        return points_[i];
    }
    const double f = (s - cumulative_[i]) / segLen;
    return points_[i] + (points_[i + 1] - points_[i]) * f;
}

double Path::headingAt(double s) const {
    if (points_.size() < 2) {
        return 0.0;
    }
    const auto i = segmentAt(std::clamp(s, 0.0, length()));
    const Vec2 d = points_[i + 1] - points_[i];
    return normalizeHeading(std::atan2(d.y, d.x));
}

Polyline chaikin(const Polyline& line, int iterations) {
    Polyline cur = line;
    for (int it = 0; it < iterations && cur.size() > 2; ++it) {
        Polyline next;
        next.reserve(cur.size() * 2);
        next.push_back(cur.front());
        for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
            const Vec2 a = cur[i];
            const Vec2 b = cur[i + 1];
            if (i > 0) {
                next.push_back(a * 0.75 + b * 0.25);
            }
            if (i + 2 < cur.size()) {
                next.push_back(a * 0.25 + b * 0.75);
            }
        }
        next.push_back(cur.back());
        cur = std::move(next);
    }
    return cur;
}

ConflictMatrix::ConflictMatrix(std::vector<std::uint8_t> groups) : groups_(std::move(groups)) {
    std::sort(groups_.begin(), groups_.end());
    groups_.erase(std::unique(groups_.begin(), groups_.end()), groups_.end());
    cells_.assign(groups_.size() * groups_.size(), false);
}

std::optional<std::size_t> ConflictMatrix::indexOf(std::uint8_t group) const {
    auto it = std::lower_bound(groups_.begin(), groups_.end(), group);
    if (it == groups_.end() || *it != group) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - groups_.begin());
}

std::size_t ConflictMatrix::at(std::uint8_t group) const {
    auto idx = indexOf(group);
    if (!idx) {
        throw UnknownSignalGroup("signal group " + std::to_string(group) + " not in conflict matrix");
    }
    return *idx;
}

bool ConflictMatrix::conflicts(std::uint8_t a, std::uint8_t b) const {
    return cells_[at(a) * groups_.size() + at(b)];
}

void ConflictMatrix::set(std::uint8_t a, std::uint8_t b, bool value) {
    const auto i = at(a);
    const auto j = at(b);
    if (i == j) {
        return;
    }
    cells_[i * groups_.size() + j] = value;
    cells_[j * groups_.size() + i] = value;
}

ConflictMatrix buildConflictMatrix(const MapPayload& map, const std::map<std::uint16_t, Polyline>& centerlines,
                                   std::span<const std::uint8_t> declaredGroups) {
    validate(map);
    std::set<std::uint8_t> governed;
    for (const auto& lane : map.lanes) {
        auto it = centerlines.find(lane.laneId);
        if (it == centerlines.end() || it->second.size() < 2) {
            throw MalformedTopology("lane " + std::to_string(lane.laneId) + " has no centerline");
        }
        governed.insert(lane.signalGroup);
    }
    std::set<std::uint8_t> all(governed);
    for (auto g : declaredGroups) {
        if (!governed.count(g)) {
            throw MalformedTopology("signal group " + std::to_string(g) + " governs no lane");
        }
        all.insert(g);
    }
    ConflictMatrix cm(std::vector<std::uint8_t>(all.begin(), all.end()));
    for (std::size_t i = 0; i < map.lanes.size(); ++i) {
        for (std::size_t j = i + 1; j < map.lanes.size(); ++j) {
            const auto& a = map.lanes[i];
            const auto& b = map.lanes[j];
            if (a.signalGroup == b.signalGroup || cm.conflicts(a.signalGroup, b.signalGroup)) {
                continue;
            }
            if (polylinesIntersect(centerlines.at(a.laneId), centerlines.at(b.laneId))) {
                cm.set(a.signalGroup, b.signalGroup, true);
            }
        }
    }
    return cm;
}

LongitudinalStep advance(double speed, double accel, double dt) {
    double v1 = speed + accel * dt;
    if (v1 >= 0.0) {
        return {speed * dt + 0.5 * accel * dt * dt, v1};
    }
    // decelerating through zero: stop where the speed reaches zero
    const double tStop = accel < 0.0 ? speed / -accel : 0.0;
    return {speed * tStop + 0.5 * accel * tStop * tStop, 0.0};
}

KinematicState integrate(const KinematicState& state, double dt) {
    const auto step = advance(state.speed, state.accel, dt);
    KinematicState out = state;
    out.x += step.distance * std::cos(state.heading);
    out.y += step.distance * std::sin(state.heading);
    out.speed = step.speed;
    return out;
}

}  // namespace sentinel
