#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/trace.hpp"

namespace sentinel {

inline constexpr std::int64_t kNotDetected = std::numeric_limits<std::int64_t>::max();

struct ReportSummary {
    std::uint64_t id = 0;
    std::uint64_t step = 0;
    std::uint32_t station = 0;
    std::string detector;
    std::string anomaly;
};

struct MitigationRecord {
    std::uint64_t reportId = 0;
    std::uint64_t step = 0;
    std::uint32_t station = 0;
    std::string action;
    std::string outcome;
};

struct RunMetrics {
    std::string fixture;
    std::string scenario;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> onsetStep;
    std::uint64_t steps = 0;
    std::vector<std::string> designated;
    // first report of any designated detector at or after onset, minus onset; kNotDetected otherwise
    std::int64_t detectionLatencySteps = kNotDetected;
    std::map<std::string, std::int64_t> latencyByDetector;  // designated detectors only
    std::uint64_t falsePositiveCount = 0;
    std::map<std::string, std::map<std::string, std::uint64_t>> mitigationOutcomes;  // action -> outcome -> n
    bool collisionOccurred = false;
    double minSeparation = std::numeric_limits<double>::infinity();
    std::vector<ReportSummary> reports;
    std::vector<MitigationRecord> mitigations;

    bool detected() const { return detectionLatencySteps != kNotDetected; }
};

// Throws SchemaMismatch when line 1 is not a header of the current schema.
RunMetrics computeMetrics(const std::string& traceText);

OrderedJson toJson(const RunMetrics& m);

struct ReportRow {
    std::string scenario;
    std::string detector;
    std::size_t runs = 0;
    std::size_t detected = 0;
    double meanLatencySteps = 0.0;  // over detected runs
    std::int64_t p95LatencySteps = kNotDetected;  // nearest rank over all runs, misses count as infinite
    std::uint64_t falsePositives = 0;
    std::size_t runsWithFalsePositives = 0;
    double falsePositiveRate = 0.0;     // runsWithFalsePositives / runs
    double mitigationSuccessRate = 0.0;  // delivered / (delivered + ignored) over this detector's actions, NaN if none
};

// Nearest-rank percentile; kNotDetected entries sort last.
std::int64_t percentile(std::vector<std::int64_t> values, double p);

// One row per (scenario, designated detector) plus an "any" row per scenario.
// Throws SchemaMismatch when the runs come from different trace schemas or fixtures.
std::vector<ReportRow> aggregate(const std::vector<RunMetrics>& runs);

void writeCsv(std::ostream& out, const std::vector<ReportRow>& rows);

// Plot-ready timeline: positions per step and detection/mitigation events.
void writeTimelineCsv(std::ostream& out, const std::string& traceText);

}  // namespace sentinel
