#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sentinel {

std::uint64_t splitmix64(std::uint64_t x);
// Order-sensitive hash of a key tuple; used for stateless random draws.
std::uint64_t hashKey(std::initializer_list<std::uint64_t> parts);
// Uniform in [0, 1) from the top 53 bits.
double toUnit(std::uint64_t bits);

// Seeded stream with portable uniform/normal draws (the std distributions are not
// specified bit-for-bit across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0)
        : engine_(hashKey({seed, stream, sub})) {}

    double uniform() { return toUnit(engine_()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean = 0.0, double sigma = 1.0);
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace sentinel
