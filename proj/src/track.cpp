#include "sentinel/track.hpp"

namespace sentinel {

std::string_view toString(TrackSource source) {
    switch (source) {
        case TrackSource::cam: return "cam";
        case TrackSource::cpm: return "cpm";
        case TrackSource::onboard: return "onboard";
        case TrackSource::uwb: return "uwb";
    }
    return "?";
}

void Track::push(std::uint64_t timeMs, const KinematicState& state, bool measured) {
    if (count_ > 0) {
        auto& last = ring_[(head_ + count_ - 1) % kCapacity];
        if (timeMs < last.timeMs) {
            throw InvariantViolation("track samples must be time-ordered");
        }
        if (timeMs == last.timeMs) {
            last = {timeMs, state, measured};
            return;
        }
    }
    if (count_ < kCapacity) {
        ring_[(head_ + count_) % kCapacity] = {timeMs, state, measured};
        ++count_;
    } else {
        ring_[head_] = {timeMs, state, measured};
        head_ = (head_ + 1) % kCapacity;
    }
}

const TrackSample& Track::operator[](std::size_t i) const {
    if (i >= count_) {
        throw OutOfRange("track index out of range");
    }
    return ring_[(head_ + i) % kCapacity];
}

std::optional<TrackSample> Track::at(std::uint64_t timeMs) const {
    for (std::size_t i = count_; i-- > 0;) {
        const auto& s = (*this)[i];
        if (s.timeMs == timeMs) {
            return s;
        }
        if (s.timeMs < timeMs) {
            break;
        }
    }
    return std::nullopt;
}

}  // namespace sentinel
