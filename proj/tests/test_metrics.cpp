#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sentinel/errors.hpp"
#include "sentinel/metrics.hpp"

using namespace sentinel;

namespace {

std::string header(const std::string& scenario, const std::string& onset, const std::string& fixture = "") {
    return std::string(R"({"schema":"v2x-sentinel-trace/1","fixture":")") + (fixture.empty() ? scenario : fixture) +
           R"(","scenario":")" + scenario + R"(","seed":1,"step_ms":100,"duration_ms":2000,"onset_step":)" + onset +
           R"(,"designated":["spatConflict","crossCheck"],"actors":[{"name":"light","station":1,"kind":"light"},)"
           R"({"name":"a","station":10,"kind":"vehicle"},{"name":"p","station":11,"kind":"vru"},)"
           R"({"name":"q","station":12,"kind":"vru"}]})"
           "\n";
}

std::string detection(int id, int step, const std::string& detector) {
    return R"({"kind":"detection","step":)" + std::to_string(step) + R"(,"t_ms":)" + std::to_string(step * 100) +
           R"(,"report_id":)" + std::to_string(id) + R"(,"station":2,"role":"rsu","detector":")" + detector +
           R"(","anomaly":"conflictingGreens","offender":{"station":1},"evidence":["00"],"score":1.0})" "\n";
}

std::string mitigation(int id, int step, const std::string& action, const std::string& outcome) {
    return R"({"kind":"mitigation","step":)" + std::to_string(step) + R"(,"t_ms":0,"report_id":)" +
           std::to_string(id) + R"(,"station":2,"action":")" + action + R"(","outcome":")" + outcome + "\"}\n";
}

std::string state(int step, double ax, double px, double qx) {
    std::ostringstream os;
    os << R"({"kind":"state","step":)" << step << R"(,"t_ms":0,"actors":[)"
       << R"({"station":10,"present":true,"x":)" << ax << R"(,"y":0,"speed":1},)"
       << R"({"station":11,"present":true,"x":)" << px << R"(,"y":0,"speed":1},)"
       << R"({"station":12,"present":true,"x":)" << qx << R"(,"y":0,"speed":1}]})" << "\n";
    return os.str();
}

// Onset at step 10: one false alarm before, crossCheck at +3, spatConflict at +5.
std::string handTrace() {
    return header("s3", "10") + state(0, 0, 10, 10.2) + detection(1, 4, "plausibility") +
           mitigation(1, 4, "hmiNotify", "delivered") + detection(2, 13, "crossCheck") +
           mitigation(2, 13, "broadcastDenm", "delivered") + mitigation(2, 13, "requestLightOverride", "pending") +
           mitigation(2, 14, "requestLightOverride", "ignored") + detection(3, 15, "spatConflict") +
           mitigation(3, 15, "broadcastDenm", "delivered") + state(20, 0, 3, 0.5);
}

}  // namespace

TEST(Percentile, NearestRank) {
    EXPECT_EQ(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.95), 10);
    EXPECT_EQ(percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.5), 5);
    std::vector<std::int64_t> twenty(20);
    for (int i = 0; i < 20; ++i) {
        twenty[static_cast<std::size_t>(i)] = 20 - i;
    }
    EXPECT_EQ(percentile(twenty, 0.95), 19);  // rank ceil(19) = 19
    EXPECT_EQ(percentile({3}, 0.95), 3);
    EXPECT_EQ(percentile({}, 0.95), kNotDetected);
}

TEST(Percentile, MissesSortLast) {
    std::vector<std::int64_t> v(19, 2);
    v.push_back(kNotDetected);
    EXPECT_EQ(percentile(v, 0.95), 2);
    v.push_back(kNotDetected);
    EXPECT_EQ(percentile(v, 0.95), kNotDetected);
}

TEST(ComputeMetrics, HandBuiltTrace) {
    const auto m = computeMetrics(handTrace());
    EXPECT_EQ(m.scenario, "s3");
    EXPECT_EQ(m.onsetStep, std::optional<std::uint64_t>{10});
    EXPECT_EQ(m.steps, 20u);
    EXPECT_EQ(m.detectionLatencySteps, 3);
    EXPECT_EQ(m.latencyByDetector.at("crossCheck"), 3);
    EXPECT_EQ(m.latencyByDetector.at("spatConflict"), 5);
    EXPECT_EQ(m.falsePositiveCount, 1u);
    EXPECT_EQ(m.reports.size(), 3u);
    // the pending override is replaced by its resolution
    EXPECT_EQ(m.mitigations.size(), 4u);
    EXPECT_EQ(m.mitigationOutcomes.at("requestLightOverride").at("ignored"), 1u);
    EXPECT_FALSE(m.mitigationOutcomes.at("requestLightOverride").count("pending"));
    EXPECT_EQ(m.mitigationOutcomes.at("broadcastDenm").at("delivered"), 2u);
    // separation between the two VRUs does not count; vehicle to VRU at step 20 is 0.5 m
    EXPECT_DOUBLE_EQ(m.minSeparation, 0.5);
    EXPECT_TRUE(m.collisionOccurred);
}

TEST(ComputeMetrics, UndetectedAndNoOnset) {
    const auto missed = computeMetrics(header("s3", "10") + detection(1, 12, "plausibility"));
    EXPECT_FALSE(missed.detected());
    EXPECT_EQ(missed.falsePositiveCount, 0u);
    EXPECT_EQ(toJson(missed)["detection_latency_steps"], "inf");

    const auto clean = computeMetrics(header("clean", "null") + detection(1, 12, "crossCheck"));
    EXPECT_FALSE(clean.onsetStep);
    EXPECT_EQ(clean.falsePositiveCount, 1u);
    EXPECT_TRUE(toJson(clean)["detection_latency_steps"].is_null());
}

TEST(ComputeMetrics, SchemaMismatch) {
    EXPECT_THROW(computeMetrics(""), SchemaMismatch);
    EXPECT_THROW(computeMetrics("not json\n"), SchemaMismatch);
    EXPECT_THROW(computeMetrics(R"({"schema":"v2x-sentinel-trace/0"})"
                                "\n"),
                 SchemaMismatch);
}

TEST(Aggregate, RowsPerDesignatedDetectorAndAny) {
    const auto a = computeMetrics(handTrace());
    const auto b = computeMetrics(header("s3", "10") + detection(1, 18, "spatConflict") +
                                  mitigation(1, 18, "broadcastDenm", "delivered"));
    const auto rows = aggregate({a, b});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].detector, "spatConflict");
    EXPECT_EQ(rows[1].detector, "crossCheck");
    EXPECT_EQ(rows[2].detector, "any");

    EXPECT_EQ(rows[0].detected, 2u);
    EXPECT_DOUBLE_EQ(rows[0].meanLatencySteps, (5.0 + 8.0) / 2);
    EXPECT_EQ(rows[0].p95LatencySteps, 8);
    EXPECT_DOUBLE_EQ(rows[0].mitigationSuccessRate, 1.0);

    EXPECT_EQ(rows[1].detected, 1u);
    EXPECT_EQ(rows[1].p95LatencySteps, kNotDetected);
    EXPECT_DOUBLE_EQ(rows[1].mitigationSuccessRate, 0.5);  // DENM delivered, override ignored

    EXPECT_EQ(rows[2].detected, 2u);
    EXPECT_EQ(rows[2].p95LatencySteps, 8);
    EXPECT_EQ(rows[2].falsePositives, 1u);
    EXPECT_DOUBLE_EQ(rows[2].falsePositiveRate, 0.5);
}

TEST(Aggregate, NoMitigationGivesNan) {
    const auto m = computeMetrics(header("s3", "10") + detection(1, 12, "spatConflict"));
    const auto rows = aggregate({m});
    EXPECT_TRUE(std::isnan(rows[0].mitigationSuccessRate));
    std::ostringstream os;
    writeCsv(os, rows);
    EXPECT_NE(os.str().find(",nan\n"), std::string::npos);
}

TEST(Aggregate, MixedFixturesForOneScenarioAreRejected) {
    const auto a = computeMetrics(header("s3", "10", "one"));
    const auto b = computeMetrics(header("s3", "10", "two"));
    EXPECT_THROW(aggregate({a, b}), SchemaMismatch);
}

TEST(Aggregate, CsvHeader) {
    std::ostringstream os;
    writeCsv(os, aggregate({computeMetrics(handTrace())}));
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "scenario,detector,runs,detected,mean_latency_steps,p95_latency_steps,false_positives,"
              "false_positive_rate,mitigation_success_rate");
}
