#include "sentinel/canbus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "sentinel/rng.hpp"

namespace sentinel {

namespace {

std::vector<std::uint8_t> makePayload(PayloadKind kind, std::uint64_t k, Rng& rng) {
    std::vector<std::uint8_t> p(8, 0);
    switch (kind) {
        case PayloadKind::counter:
            for (int i = 0; i < 8; ++i) {
                p[i] = static_cast<std::uint8_t>(k >> (8 * i));
            }
            break;
        case PayloadKind::speed: {
            // centi-km/h around 50 km/h with a slow oscillation
            const auto v = static_cast<std::uint16_t>(5000 + 300 * std::sin(static_cast<double>(k) * 0.01));
            p[0] = static_cast<std::uint8_t>(v);
            p[1] = static_cast<std::uint8_t>(v >> 8);
            p[7] = static_cast<std::uint8_t>(k);
            break;
        }
        case PayloadKind::constant: std::fill(p.begin(), p.end(), 0x55); break;
        case PayloadKind::random:
            for (auto& b : p) {
                b = static_cast<std::uint8_t>(rng.bits());
            }
            break;
    }
    return p;
}

int hexNibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw MalformedMessage(std::string("bad hex digit '") + c + "'");
}

}  // namespace

bool canOrder(const CanFrame& a, const CanFrame& b) {
    if (a.timestampMs != b.timestampMs) {
        return a.timestampMs < b.timestampMs;
    }
    return a.id < b.id;
}

void validate(const CanFrame& frame) {
    if (frame.id >= 2048) {
        throw InvariantViolation("CAN id above 11 bits");
    }
    if (frame.payload.size() > 8) {
        throw InvariantViolation("CAN payload longer than 8 bytes");
    }
    if (!std::isfinite(frame.timestampMs)) {
        throw InvariantViolation("CAN timestamp not finite");
    }
}

CanSchedule CanSchedule::standard() {
    return CanSchedule{{
        {0x100, 10.0, 0.1, PayloadKind::speed},
        {0x200, 20.0, 0.2, PayloadKind::counter},
        {0x300, 50.0, 0.5, PayloadKind::counter},
        {0x400, 100.0, 1.0, PayloadKind::constant},
    }};
}

double CanSchedule::fastestPeriodMs() const {
    double best = 0.0;
    for (const auto& e : entries) {
        if (best == 0.0 || e.periodMs < best) {
            best = e.periodMs;
        }
    }
    return best;
}

void validate(const CanSchedule& schedule) {
    std::set<std::uint16_t> ids;
    for (const auto& e : schedule.entries) {
        if (e.id >= 2048) {
            throw InvariantViolation("CAN id above 11 bits");
        }
        if (!(e.periodMs > 0.0)) {
            throw InvariantViolation("CAN period must be positive");
        }
        if (!(e.jitterMs >= 0.0) || e.jitterMs >= e.periodMs / 2) {
            throw InvariantViolation("CAN jitter must be in [0, period/2)");
        }
        if (!ids.insert(e.id).second) {
            throw InvariantViolation("duplicate CAN id in schedule");
        }
    }
}

std::vector<CanFrame> generateTraffic(const CanSchedule& schedule, double durationMs, std::uint64_t seed) {
    validate(schedule);
    std::vector<CanFrame> frames;
    for (const auto& e : schedule.entries) {
        Rng rng(seed, 0xCA9, e.id);
        for (std::uint64_t k = 0;; ++k) {
            const double nominal = static_cast<double>(k) * e.periodMs;
            if (nominal - e.jitterMs >= durationMs) {
                break;
            }
            const double t = nominal + (e.jitterMs > 0.0 ? rng.uniform(-e.jitterMs, e.jitterMs) : 0.0);
            auto payload = makePayload(e.payload, k, rng);
            if (t >= 0.0 && t < durationMs) {
                frames.push_back({e.id, std::move(payload), t});
            }
        }
    }
    std::sort(frames.begin(), frames.end(), canOrder);
    return frames;
}

void writeCanCsv(std::ostream& out, const std::vector<CanFrame>& frames) {
    static constexpr char kHex[] = "0123456789abcdef";
    out << "timestamp_ms,id_hex,payload_hex\n";
    char buf[64];
    for (const auto& f : frames) {
        auto res = std::to_chars(buf, buf + sizeof(buf), f.timestampMs);
        out.write(buf, res.ptr - buf);
        out << ',' << kHex[(f.id >> 8) & 0xF] << kHex[(f.id >> 4) & 0xF] << kHex[f.id & 0xF] << ',';
        for (auto b : f.payload) {
            out << kHex[b >> 4] << kHex[b & 0xF];
        }
        out << '\n';
    }
}

std::vector<CanFrame> readCanCsv(std::istream& in) {
    std::vector<CanFrame> frames;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (lineNo == 1 && line.rfind("timestamp_ms", 0) == 0)) {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw MalformedMessage("CAN csv line " + std::to_string(lineNo) + ": expected 3 columns");
        }
        CanFrame f;
        auto res = std::from_chars(line.data(), line.data() + c1, f.timestampMs);
        if (res.ec != std::errc{} || res.ptr != line.data() + c1) {
            throw MalformedMessage("CAN csv line " + std::to_string(lineNo) + ": bad timestamp");
        }
        unsigned id = 0;
        res = std::from_chars(line.data() + c1 + 1, line.data() + c2, id, 16);
        if (res.ec != std::errc{} || res.ptr != line.data() + c2) {
            throw MalformedMessage("CAN csv line " + std::to_string(lineNo) + ": bad id");
        }
        f.id = static_cast<std::uint16_t>(id);
        const std::string hex = line.substr(c2 + 1);
        if (hex.size() % 2 != 0) {
            throw MalformedMessage("CAN csv line " + std::to_string(lineNo) + ": odd payload length");
        }
        for (std::size_t i = 0; i < hex.size(); i += 2) {
            f.payload.push_back(static_cast<std::uint8_t>(hexNibble(hex[i]) * 16 + hexNibble(hex[i + 1])));
        }
        if (id >= 2048) {
            throw MalformedMessage("CAN csv line " + std::to_string(lineNo) + ": id above 11 bits");
        }
        validate(f);
        frames.push_back(std::move(f));
    }
    return frames;
}

std::string toString(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::counter: return "counter";
        case PayloadKind::speed: return "speed";
        case PayloadKind::constant: return "constant";
        case PayloadKind::random: return "random";
    }
    return "?";
}

PayloadKind payloadKindFromString(const std::string& name) {
    for (auto k : {PayloadKind::counter, PayloadKind::speed, PayloadKind::constant, PayloadKind::random}) {
        if (toString(k) == name) {
            return k;
        }
    }
    throw InvariantViolation("unknown CAN payload kind '" + name + "'");
}

}  // namespace sentinel
