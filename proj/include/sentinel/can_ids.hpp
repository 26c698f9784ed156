#pragma once

#include <deque>
#include <map>
#include <span>
#include <vector>

#include "sentinel/canbus.hpp"
#include "sentinel/detection.hpp"

namespace sentinel {

struct CanBaseline {
    struct Stat {
        double medianMs = 0.0;
        double madMs = 0.0;
        std::size_t frames = 0;
    };
    std::map<std::uint16_t, Stat> perId;

    bool knows(std::uint16_t id) const { return perId.count(id) != 0; }
};

double median(std::vector<double> values);

// Throws InsufficientData naming the first id with fewer than cfg.minTrainFrames frames.
CanBaseline canLearnBaseline(std::span<const CanFrame> frames, const CanIdsConfig& cfg);

// Streaming timing detector. Frames must arrive in bus order.
class CanDetector {
public:
    CanDetector(CanBaseline baseline, CanIdsConfig cfg);

    std::vector<DetectionReport> feed(const CanFrame& frame);

private:
    struct IdWindow {
        std::deque<double> times;
        bool active = false;
    };

    CanBaseline baseline_;
    CanIdsConfig cfg_;
    std::deque<std::pair<double, std::uint16_t>> recent_;
    std::map<std::uint16_t, std::size_t> suspiciousCounts_;
    std::size_t suspicious_ = 0;
    bool dosActive_ = false;
    std::map<std::uint16_t, IdWindow> windows_;
};

std::vector<DetectionReport> canDetect(std::span<const CanFrame> frames, const CanBaseline& baseline,
                                       const CanIdsConfig& cfg);

}  // namespace sentinel
