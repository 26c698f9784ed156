#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace sentinel {

inline constexpr const char* kTraceSchema = "v2x-sentinel-trace/1";

using OrderedJson = nlohmann::ordered_json;

// JSONL trace: a header object on line 1, then one event per line. Every event starts with
// "kind", "step", "t_ms" in that order so readers can filter without a full parse.
class TraceWriter {
public:
    void header(const OrderedJson& h);
    OrderedJson event(const char* kind, std::uint64_t step, std::uint64_t timeMs) const;
    void append(const OrderedJson& e);

    const std::string& text() const { return text_; }
    std::size_t lines() const { return lines_; }

private:
    std::string text_;
    std::size_t lines_ = 0;
};

}  // namespace sentinel
