#include "krbary/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace krbary {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 1))) {}

std::uint64_t Rng::next() { return mix(key_ + ++counter_ * kGamma); }

double Rng::uniform() { return double(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    // Box-Muller, one output per pair so the draw count stays fixed.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::uint64_t Rng::poisson(double lambda) {
    if (!(lambda > 0)) return 0;
    if (lambda > 30) {
        double half = lambda / 2;
        return poisson(half) + poisson(lambda - half);
    }
    double L = std::exp(-lambda), prod = 1.0;
    std::uint64_t k = 0;
    for (;;) {
        prod *= uniform();
        if (prod <= L) return k;
        ++k;
    }
}

std::size_t Rng::index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * double(n));
    return k < n ? k : n - 1;
}

std::vector<std::size_t> Rng::sampleWithoutReplacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + index(n - i)]);
    idx.resize(k);
    return idx;
}

}  // namespace krbary
