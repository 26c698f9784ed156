#include "sentinel/can_ids.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sentinel/wire.hpp"

namespace sentinel {

namespace {

Digest windowDigest(std::uint16_t id, double fromMs, double toMs, std::size_t frames) {
    wire::Writer w;
    w.u16(id);
    w.f64(fromMs);
    w.f64(toMs);
    w.u64(frames);
    const auto bytes = w.take();
    return evidenceDigest("can-window", bytes);
}

std::string hexId(std::uint16_t id) {
    std::ostringstream os;
    os << "0x" << std::hex << id;
    return os.str();
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) {
        throw InsufficientData("median of empty sample");
    }
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

CanBaseline canLearnBaseline(std::span<const CanFrame> frames, const CanIdsConfig& cfg) {
    std::map<std::uint16_t, std::vector<double>> times;
    for (const auto& f : frames) {
        times[f.id].push_back(f.timestampMs);
    }
    CanBaseline out;
    for (auto& [id, ts] : times) {
        if (ts.size() < cfg.minTrainFrames) {
            throw InsufficientData("CAN id " + hexId(id) + " has " + std::to_string(ts.size()) +
                                   " training frames, need " + std::to_string(cfg.minTrainFrames));
        }
        std::sort(ts.begin(), ts.end());
        std::vector<double> intervals;
        intervals.reserve(ts.size() - 1);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            intervals.push_back(ts[i] - ts[i - 1]);
        }
        CanBaseline::Stat st;
        st.medianMs = median(intervals);
        for (auto& v : intervals) {
            v = std::abs(v - st.medianMs);
        }
        st.madMs = median(intervals);
        st.frames = ts.size();
        out.perId[id] = st;
    }
    return out;
}

CanDetector::CanDetector(CanBaseline baseline, CanIdsConfig cfg) : baseline_(std::move(baseline)), cfg_(cfg) {}

std::vector<DetectionReport> CanDetector::feed(const CanFrame& frame) {
    std::vector<DetectionReport> out;
    const double t = frame.timestampMs;
    const auto nowMs = static_cast<std::uint64_t>(std::max(0.0, std::floor(t)));

    // occupancy of ids the baseline never saw (0x000 included) in the sliding window
    const bool suspicious = frame.id == 0 || !baseline_.knows(frame.id);
    recent_.emplace_back(t, frame.id);
    if (suspicious) {
        ++suspicious_;
        ++suspiciousCounts_[frame.id];
    }
    while (!recent_.empty() && recent_.front().first <= t - cfg_.dosWindowMs) {
        const auto old = recent_.front().second;
        if (old == 0 || !baseline_.knows(old)) {
            --suspicious_;
            if (--suspiciousCounts_[old] == 0) {
                suspiciousCounts_.erase(old);
            }
        }
        recent_.pop_front();
    }
    const double share = static_cast<double>(suspicious_) / static_cast<double>(recent_.size());
    if (recent_.size() >= cfg_.dosMinFrames && share > cfg_.dosShare) {
        if (!dosActive_) {
            dosActive_ = true;
            auto dominant = std::max_element(suspiciousCounts_.begin(), suspiciousCounts_.end(),
                                             [](const auto& a, const auto& b) { return a.second < b.second; });
            DetectionReport r;
            r.detector = DetectorId::canTiming;
            r.anomaly = Anomaly::canDos;
            r.offender = Offender::can(dominant->first);
            r.evidence = {windowDigest(dominant->first, recent_.front().first, t, recent_.size())};
            r.simTimeMs = nowMs;
            r.score = share;
            out.push_back(std::move(r));
        }
    } else if (share <= cfg_.dosShare / 2) {
        dosActive_ = false;
    }

    auto stat = baseline_.perId.find(frame.id);
    if (stat == baseline_.perId.end() || frame.id == 0) {
        return out;
    }
    auto& win = windows_[frame.id];
    win.times.push_back(t);
    while (!win.times.empty() && win.times.front() <= t - cfg_.windowMs) {
        win.times.pop_front();
    }
    if (win.times.size() < cfg_.minWindowIntervals + 1) {
        return out;
    }
    std::vector<double> intervals;
    intervals.reserve(win.times.size() - 1);
    for (std::size_t i = 1; i < win.times.size(); ++i) {
        intervals.push_back(win.times[i] - win.times[i - 1]);
    }
    const double observed = median(std::move(intervals));
    const double base = stat->second.medianMs;
    const double mad = std::max(stat->second.madMs, cfg_.madFloor * base);
    const bool fast = observed < cfg_.injectionRatio * base || observed < base - cfg_.madK * mad;
    if (fast && !win.active) {
        win.active = true;
        DetectionReport r;
        r.detector = DetectorId::canTiming;
        r.anomaly = Anomaly::canInjection;
        r.offender = Offender::can(frame.id);
        r.evidence = {windowDigest(frame.id, win.times.front(), t, win.times.size())};
        r.simTimeMs = nowMs;
        r.score = observed / base;
        out.push_back(std::move(r));
    } else if (!fast) {
        win.active = false;
    }
    return out;
}

std::vector<DetectionReport> canDetect(std::span<const CanFrame> frames, const CanBaseline& baseline,
                                       const CanIdsConfig& cfg) {
    CanDetector detector(baseline, cfg);
    std::vector<DetectionReport> out;
    for (const auto& f : frames) {
        auto r = detector.feed(f);
        out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return out;
}

}  // namespace sentinel
