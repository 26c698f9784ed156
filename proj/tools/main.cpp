#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/fixture.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/simulation.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

constexpr int kExitFixture = 2;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<Fixture> load(const std::string& path, const std::vector<std::string>& sets) {
    try {
        LoadOptions opts;
        opts.envSeed = seedFromEnvironment();
        for (const auto& s : sets) {
            opts.overrides.push_back(parseOverride(s));
        }
        return loadFixture(path, opts);
    } catch (const FixtureError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return std::nullopt;
    }
}

int runCommand(const std::string& path, const std::vector<std::string>& sets, const std::string& outDir) {
    auto fixture = load(path, sets);
    if (!fixture) {
        return kExitFixture;
    }
    Simulation sim(std::move(*fixture));
    sim.run();
    const auto metrics = computeMetrics(sim.trace().text());

    fs::create_directories(outDir);
    {
        std::ofstream out(fs::path(outDir) / "trace.jsonl", std::ios::binary);
        out << sim.trace().text();
    }
    {
        std::ofstream out(fs::path(outDir) / "metrics.json", std::ios::binary);
        out << toJson(metrics).dump(2) << '\n';
    }
    std::cout << metrics.fixture << " scenario=" << metrics.scenario << " seed=" << metrics.seed
              << " reports=" << metrics.reports.size() << " false_positives=" << metrics.falsePositiveCount;
    if (metrics.onsetStep) {
        std::cout << " latency_steps="
                  << (metrics.detected() ? std::to_string(metrics.detectionLatencySteps) : std::string("inf"));
    }
    std::cout << " collision=" << (metrics.collisionOccurred ? "yes" : "no") << '\n';
    return 0;
}

int reportCommand(const std::vector<std::string>& traces, const std::string& csvPath, const std::string& timeline) {
    std::vector<RunMetrics> runs;
    for (const auto& t : traces) {
        try {
            runs.push_back(computeMetrics(slurp(t)));
        } catch (const SchemaMismatch& e) {
            std::cerr << "error: " << t << ": " << e.what() << '\n';
            return 1;
        }
    }
    std::vector<ReportRow> rows;
    try {
        rows = aggregate(runs);
    } catch (const SchemaMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    if (csvPath.empty()) {
        writeCsv(std::cout, rows);
    } else {
        std::ofstream out(csvPath);
        writeCsv(out, rows);
    }
    if (!timeline.empty()) {
        if (traces.size() != 1) {
            std::cerr << "error: --timeline needs exactly one trace\n";
            return 1;
        }
        std::ofstream out(timeline);
        writeTimelineCsv(out, slurp(traces.front()));
    }
    return 0;
}

int validateCommand(const std::string& path, const std::vector<std::string>& sets) {
    auto fixture = load(path, sets);
    if (!fixture) {
        return kExitFixture;
    }
    std::cout << "ok: " << fixture->name << " scenario=" << toString(fixture->sim.scenario)
              << " actors=" << fixture->actors.size() << " steps=" << fixture->sim.steps() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intersection V2X misbehavior-detection simulator"};
    app.require_subcommand(1);

    std::string fixture;
    std::vector<std::string> sets;
    std::string outDir = ".";
    auto* run = app.add_subcommand("run", "Run a scenario fixture, writing trace.jsonl and metrics.json");
    run->add_option("fixture", fixture, "Fixture file (.yaml may be omitted)")->required();
    run->add_option("--set", sets, "Override a fixture value, key=value (repeatable)");
    run->add_option("--out", outDir, "Output directory");

    std::vector<std::string> traces;
    std::string csv;
    std::string timeline;
    auto* report = app.add_subcommand("report", "Aggregate metrics across traces");
    report->add_option("traces", traces, "trace.jsonl files")->required()->check(CLI::ExistingFile);
    report->add_option("--csv", csv, "Write the summary CSV here instead of stdout");
    report->add_option("--timeline", timeline, "Write plot-ready timeline CSV for a single trace");

    std::string vfixture;
    std::vector<std::string> vsets;
    auto* val = app.add_subcommand("validate", "Check that a fixture loads and validates");
    val->add_option("fixture", vfixture, "Fixture file")->required();
    val->add_option("--set", vsets, "Override a fixture value, key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return runCommand(fixture, sets, outDir);
        }
        if (*report) {
            return reportCommand(traces, csv, timeline);
        }
        return validateCommand(vfixture, vsets);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
