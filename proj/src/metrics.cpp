#include "sentinel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

// Events start with {"kind":"<name>" so the kind can be read without parsing the line.
std::string kindOf(const std::string& line) {
    static const std::string prefix = "{\"kind\":\"";
    if (line.compare(0, prefix.size(), prefix) != 0) {
        return {};
    }
    const auto end = line.find('"', prefix.size());
    return end == std::string::npos ? std::string{} : line.substr(prefix.size(), end - prefix.size());
}

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (!std::isfinite(v)) {
        return "inf";
    }
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

std::string fmtSteps(std::int64_t v) { return v == kNotDetected ? "inf" : std::to_string(v); }

}  // namespace

RunMetrics computeMetrics(const std::string& traceText) {
    std::istringstream in(traceText);
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaMismatch("empty trace");
    }
    OrderedJson header;
    try {
        header = OrderedJson::parse(line);
    } catch (const std::exception&) {
        throw SchemaMismatch("trace line 1 is not a JSON header");
    }
    if (!header.is_object() || !header.contains("schema") || header["schema"] != kTraceSchema) {
        throw SchemaMismatch("trace schema '" + (header.is_object() && header.contains("schema")
                                                     ? header["schema"].dump()
                                                     : std::string("?")) +
                             "' is not " + kTraceSchema);
    }
    RunMetrics m;
    m.fixture = header.value("fixture", "");
    m.scenario = header.value("scenario", "");
    m.seed = header.value("seed", std::uint64_t{0});
    if (!header["onset_step"].is_null()) {
        m.onsetStep = header["onset_step"].get<std::uint64_t>();
    }
    m.steps = header.value("duration_ms", std::uint64_t{0}) / header.value("step_ms", std::uint64_t{100});
    for (const auto& d : header["designated"]) {
        m.designated.push_back(d.get<std::string>());
        m.latencyByDetector[d.get<std::string>()] = kNotDetected;
    }
    std::map<std::uint32_t, bool> isVru;
    for (const auto& a : header["actors"]) {
        isVru[a["station"].get<std::uint32_t>()] = a["kind"] == "vru";
    }
    std::set<std::string> designated(m.designated.begin(), m.designated.end());

    // pending override requests are superseded by their resolution
    std::map<std::uint64_t, std::size_t> pendingOverride;
    while (std::getline(in, line)) {
        const auto kind = kindOf(line);
        if (kind == "detection") {
            const auto e = OrderedJson::parse(line);
            ReportSummary r{e["report_id"], e["step"], e["station"], e["detector"], e["anomaly"]};
            const bool afterOnset = m.onsetStep && r.step >= *m.onsetStep;
            if (!afterOnset) {
                ++m.falsePositiveCount;
            } else if (designated.count(r.detector)) {
                const auto lat = static_cast<std::int64_t>(r.step - *m.onsetStep);
                auto& slot = m.latencyByDetector[r.detector];
                slot = std::min(slot, lat);
                m.detectionLatencySteps = std::min(m.detectionLatencySteps, lat);
            }
            m.reports.push_back(std::move(r));
        } else if (kind == "mitigation") {
            const auto e = OrderedJson::parse(line);
            MitigationRecord rec{e["report_id"], e["step"], e["station"], e["action"], e["outcome"]};
            if (rec.action == "requestLightOverride") {
                if (rec.outcome == "pending") {
                    pendingOverride[rec.reportId] = m.mitigations.size();
                } else if (auto it = pendingOverride.find(rec.reportId); it != pendingOverride.end()) {
                    m.mitigations[it->second].outcome = rec.outcome;
                    pendingOverride.erase(it);
                    continue;
                }
            }
            m.mitigations.push_back(std::move(rec));
        } else if (kind == "state") {
            const auto e = OrderedJson::parse(line);
            const auto& actors = e["actors"];
            for (std::size_t i = 0; i < actors.size(); ++i) {
                if (!actors[i]["present"].get<bool>()) {
                    continue;
                }
                for (std::size_t j = i + 1; j < actors.size(); ++j) {
                    if (!actors[j]["present"].get<bool>()) {
                        continue;
                    }
                    if (isVru[actors[i]["station"]] && isVru[actors[j]["station"]]) {
                        continue;
                    }
                    const double d = std::hypot(actors[i]["x"].get<double>() - actors[j]["x"].get<double>(),
                                                actors[i]["y"].get<double>() - actors[j]["y"].get<double>());
                    m.minSeparation = std::min(m.minSeparation, d);
                }
            }
        }
    }
    m.collisionOccurred = m.minSeparation < 1.0;
    for (const auto& rec : m.mitigations) {
        ++m.mitigationOutcomes[rec.action][rec.outcome];
    }
    return m;
}

OrderedJson toJson(const RunMetrics& m) {
    OrderedJson j;
    j["schema"] = kTraceSchema;
    j["fixture"] = m.fixture;
    j["scenario"] = m.scenario;
    j["seed"] = m.seed;
    j["onset_step"] = m.onsetStep ? OrderedJson(*m.onsetStep) : OrderedJson(nullptr);
    j["detection_latency_steps"] =
        m.onsetStep ? (m.detected() ? OrderedJson(m.detectionLatencySteps) : OrderedJson("inf")) : OrderedJson(nullptr);
    OrderedJson by = OrderedJson::object();
    for (const auto& [det, lat] : m.latencyByDetector) {
        by[det] = lat == kNotDetected ? OrderedJson("inf") : OrderedJson(lat);
    }
    j["latency_by_detector"] = by;
    j["false_positive_count"] = m.falsePositiveCount;
    j["report_count"] = m.reports.size();
    OrderedJson outcomes = OrderedJson::object();
    for (const auto& [action, counts] : m.mitigationOutcomes) {
        OrderedJson c = OrderedJson::object();
        for (const auto& [o, n] : counts) {
            c[o] = n;
        }
        outcomes[action] = c;
    }
    j["mitigation_outcomes"] = outcomes;
    j["collision_occurred"] = m.collisionOccurred;
    j["min_separation_m"] = std::isfinite(m.minSeparation) ? OrderedJson(m.minSeparation) : OrderedJson(nullptr);
    return j;
}

std::int64_t percentile(std::vector<std::int64_t> values, double p) {
    if (values.empty()) {
        return kNotDetected;
    }
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

std::vector<ReportRow> aggregate(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) {
        return {};
    }
    std::map<std::string, std::string> fixtureOf;
    for (const auto& r : runs) {
        auto [it, fresh] = fixtureOf.emplace(r.scenario, r.fixture);
        if (!fresh && it->second != r.fixture) {
            throw SchemaMismatch("scenario " + r.scenario + " traces come from fixtures '" + it->second + "' and '" +
                                 r.fixture + "'");
        }
    }
    std::map<std::string, std::vector<const RunMetrics*>> byScenario;
    for (const auto& r : runs) {
        byScenario[r.scenario].push_back(&r);
    }
    std::vector<ReportRow> rows;
    for (const auto& [scenario, group] : byScenario) {
        std::vector<std::string> detectors = group.front()->designated;
        detectors.push_back("any");
        for (const auto& det : detectors) {
            ReportRow row;
            row.scenario = scenario;
            row.detector = det;
            row.runs = group.size();
            std::vector<std::int64_t> lats;
            double sum = 0.0;
            std::uint64_t delivered = 0;
            std::uint64_t failed = 0;
            for (const auto* r : group) {
                std::int64_t lat = kNotDetected;
                if (det == "any") {
                    lat = r->detectionLatencySteps;
                } else if (auto it = r->latencyByDetector.find(det); it != r->latencyByDetector.end()) {
                    lat = it->second;
                }
                if (r->onsetStep) {
                    lats.push_back(lat);
                    if (lat != kNotDetected) {
                        ++row.detected;
                        sum += static_cast<double>(lat);
                    }
                }
                row.falsePositives += r->falsePositiveCount;
                row.runsWithFalsePositives += r->falsePositiveCount > 0 ? 1 : 0;
                std::set<std::uint64_t> ids;
                for (const auto& rep : r->reports) {
                    if (det == "any" || rep.detector == det) {
                        ids.insert(rep.id);
                    }
                }
                for (const auto& mit : r->mitigations) {
                    if (ids.count(mit.reportId)) {
                        delivered += mit.outcome == "delivered";
                        failed += mit.outcome == "ignored";
                    }
                }
            }
            row.meanLatencySteps = row.detected ? sum / static_cast<double>(row.detected)
                                                : std::numeric_limits<double>::infinity();
            row.p95LatencySteps = percentile(lats, 0.95);
            row.falsePositiveRate = static_cast<double>(row.runsWithFalsePositives) / static_cast<double>(row.runs);
            row.mitigationSuccessRate =
                delivered + failed ? static_cast<double>(delivered) / static_cast<double>(delivered + failed)
                                : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
        }
    }
    return rows;
}

void writeCsv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "scenario,detector,runs,detected,mean_latency_steps,p95_latency_steps,false_positives,"
           "false_positive_rate,mitigation_success_rate\n";
    for (const auto& r : rows) {
        out << r.scenario << ',' << r.detector << ',' << r.runs << ',' << r.detected << ','
            << fmt(r.meanLatencySteps) << ',' << fmtSteps(r.p95LatencySteps) << ',' << r.falsePositives << ','
            << fmt(r.falsePositiveRate) << ',' << fmt(r.mitigationSuccessRate) << '\n';
    }
}

void writeTimelineCsv(std::ostream& out, const std::string& traceText) {
    std::istringstream in(traceText);
    std::string line;
    std::getline(in, line);
    out << "step,t_ms,kind,station,x,y,speed,detail\n";
    while (std::getline(in, line)) {
        const auto kind = kindOf(line);
        if (kind != "state" && kind != "detection" && kind != "mitigation") {
            continue;
        }
        const auto e = OrderedJson::parse(line);
        const auto prefix = std::to_string(e["step"].get<std::uint64_t>()) + ',' +
                            std::to_string(e["t_ms"].get<std::uint64_t>()) + ',';
        if (kind == "state") {
            for (const auto& a : e["actors"]) {
                if (!a["present"].get<bool>()) {
                    continue;
                }
                out << prefix << "position," << a["station"].get<std::uint32_t>() << ',' << fmt(a["x"].get<double>())
                    << ',' << fmt(a["y"].get<double>()) << ',' << fmt(a["speed"].get<double>()) << ",\n";
            }
            std::string phases;
            for (const auto& [g, st] : e["signals"].items()) {
                phases += (phases.empty() ? "" : " ") + g + "=" + st.get<std::string>();
            }
            out << prefix << "signals,,,,," << phases << '\n';
        } else if (kind == "detection") {
            out << prefix << "detection," << e["station"].get<std::uint32_t>() << ",,,,"
                << e["detector"].get<std::string>() << '/' << e["anomaly"].get<std::string>() << '\n';
        } else {
            out << prefix << "mitigation," << e["station"].get<std::uint32_t>() << ",,,,"
                << e["action"].get<std::string>() << '/' << e["outcome"].get<std::string>() << '\n';
        }
    }
}

}  // namespace sentinel
