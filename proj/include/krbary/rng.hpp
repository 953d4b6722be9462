#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace krbary {

// Counter-based generator: the k-th draw of stream s under seed S is
// splitmix64_finalize(key(S, s) + k * 0x9E3779B97F4A7C15), with
// key(S, s) = splitmix64_finalize(S ^ splitmix64_finalize(s + 1)).
// Streams are independent of each other and of the order in which they are used.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next();
    // [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    bool bernoulli(double p);
    // Knuth's product method, switching to a sum of halves above lambda = 30 to avoid underflow.
    std::uint64_t poisson(double lambda);
    // floor(u * n) for n > 0.
    std::size_t index(std::size_t n);
    // k distinct indices of [0, n) drawn without replacement (partial Fisher-Yates).
    std::vector<std::size_t> sampleWithoutReplacement(std::size_t n, std::size_t k);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace krbary
