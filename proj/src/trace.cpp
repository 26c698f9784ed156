#include "sentinel/trace.hpp"

namespace sentinel {

void TraceWriter::header(const OrderedJson& h) {
    // the header always comes first
    text_.clear();
    lines_ = 0;
    append(h);
}

OrderedJson TraceWriter::event(const char* kind, std::uint64_t step, std::uint64_t timeMs) const {
    OrderedJson e;
    e["kind"] = kind;
    e["step"] = step;
    e["t_ms"] = timeMs;
    return e;
}

void TraceWriter::append(const OrderedJson& e) {
    text_ += e.dump();
    text_ += '\n';
    ++lines_;
}

}  // namespace sentinel
