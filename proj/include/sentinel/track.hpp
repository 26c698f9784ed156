#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "sentinel/messages.hpp"

namespace sentinel {

enum class TrackSource : std::uint8_t { cam, cpm, onboard, uwb };

std::string_view toString(TrackSource source);

struct TrackSample {
    std::uint64_t timeMs = 0;
    KinematicState state;
    bool measured = true;  // false for samples a tracker coasted through
};

// Fixed-capacity, time-ordered history of one subject as seen through one source.
class Track {
public:
    static constexpr std::size_t kCapacity = 32;

    Track() = default;
    Track(std::uint32_t subject, TrackSource source) : subject_(subject), source_(source) {}

    std::uint32_t subject() const { return subject_; }
    TrackSource source() const { return source_; }

    // A sample at the latest time replaces it; an older time throws InvariantViolation.
    void push(std::uint64_t timeMs, const KinematicState& state, bool measured = true);

    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    // 0 is the oldest retained sample.
    const TrackSample& operator[](std::size_t i) const;
    const TrackSample& latest() const { return (*this)[count_ - 1]; }
    std::optional<TrackSample> at(std::uint64_t timeMs) const;

private:
    std::uint32_t subject_ = 0;
    TrackSource source_ = TrackSource::cam;
    std::array<TrackSample, kCapacity> ring_{};
    std::size_t head_ = 0;  // index of the oldest sample
    std::size_t count_ = 0;
};

}  // namespace sentinel
