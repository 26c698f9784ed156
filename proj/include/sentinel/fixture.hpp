#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentinel/scenario.hpp"

namespace sentinel {

// A fixture problem anchored to the file (or override) and line it came from.
class FixtureError : public std::runtime_error {
public:
    FixtureError(std::string source, int line, int column, const std::string& message);

    const std::string& source() const { return source_; }
    int line() const { return line_; }  // 1-based; 0 when not tied to a line
    int column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    std::string source_;
    int line_;
    int column_;
    std::string message_;
};

struct Override {
    std::string key;    // dotted path, e.g. sim.seed or actors.ped.start_ms
    std::string value;  // YAML scalar or flow sequence
};

// Parses `key=value`. Throws FixtureError.
Override parseOverride(const std::string& text);

struct LoadOptions {
    std::vector<Override> overrides;
    // Seed from the environment; applied after the files, before `overrides`.
    std::optional<std::string> envSeed;
};

// Reads V2X_SENTINEL_SEED.
std::optional<std::string> seedFromEnvironment();

// `path` may omit the .yaml extension. A fixture may name a `base:` file (relative to itself)
// whose values it overrides; sequences replace the base's sequence wholesale.
Fixture loadFixture(const std::filesystem::path& path, const LoadOptions& options = {});
Fixture loadFixtureText(const std::string& text, const std::string& sourceName = "<text>",
                        const LoadOptions& options = {});

std::filesystem::path resolveFixturePath(const std::filesystem::path& path);

}  // namespace sentinel
