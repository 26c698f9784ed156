#pragma once

// Little-endian fixed-width primitives shared by the message and trust codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>

#include "sentinel/messages.hpp"

namespace sentinel::wire {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void raw(ByteView bytes) {
        if (bytes.empty()) {
            return;
        }
        const auto at = out_.size();
        out_.resize(at + bytes.size());
        std::memcpy(out_.data() + at, bytes.data(), bytes.size());
    }

    void count(std::size_t n) {
        if (n > 0xFFFF) {
            throw InvariantViolation("list longer than 65535 entries");
        }
        u16(static_cast<std::uint16_t>(n));
    }

    Bytes take() { return std::move(out_); }

private:
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    Bytes out_;
};

class Reader {
public:
    explicit Reader(ByteView bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    ByteView raw(std::size_t n) {
        need(n);
        auto view = bytes_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> array() {
        std::array<std::uint8_t, N> out{};
        auto view = raw(N);
        std::memcpy(out.data(), view.data(), N);
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void finish() const {
        if (remaining() != 0) {
            throw MalformedMessage(std::to_string(remaining()) + " trailing bytes");
        }
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) {
            throw MalformedMessage("truncated at offset " + std::to_string(pos_));
        }
    }

    template <typename T>
    T le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return v;
    }

    ByteView bytes_;
    std::size_t pos_ = 0;
};

}  // namespace sentinel::wire
