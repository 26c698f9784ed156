#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sentinel/errors.hpp"

namespace sentinel {

struct CanFrame {
    std::uint16_t id = 0;  // 11-bit
    std::vector<std::uint8_t> payload;
    double timestampMs = 0.0;

    friend bool operator==(const CanFrame&, const CanFrame&) = default;
};

// Arbitration order: earlier first, lower id wins ties.
bool canOrder(const CanFrame& a, const CanFrame& b);

void validate(const CanFrame& frame);

enum class PayloadKind : std::uint8_t { counter, speed, constant, random };

struct CanScheduleEntry {
    std::uint16_t id = 0;
    double periodMs = 10.0;
    double jitterMs = 0.0;
    PayloadKind payload = PayloadKind::counter;
};

struct CanSchedule {
    std::vector<CanScheduleEntry> entries;

    // 0x100 speed @10 ms, 0x200 brake @20 ms, 0x300 @50 ms, 0x400 @100 ms.
    static CanSchedule standard();
    double fastestPeriodMs() const;
};

void validate(const CanSchedule& schedule);

std::vector<CanFrame> generateTraffic(const CanSchedule& schedule, double durationMs, std::uint64_t seed);

// `timestamp_ms,id_hex,payload_hex` with a header row.
void writeCanCsv(std::ostream& out, const std::vector<CanFrame>& frames);
std::vector<CanFrame> readCanCsv(std::istream& in);

std::string toString(PayloadKind kind);
PayloadKind payloadKindFromString(const std::string& name);

}  // namespace sentinel
