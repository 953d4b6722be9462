#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "krbary/measure.hpp"

namespace krbary::synth {

struct NestedConfig {
    std::size_t count = 100;
    std::size_t ellipses = 0;  // 0: uniform on {1, 2, 3}
    std::size_t pointsPerEllipse = 50;
    std::uint64_t seed = 0;
    double axisMin = 0.05, axisMax = 0.25;
};

// Concentric ellipses in [0,1]^2; the l-th of k is the outer one scaled by (k - l)/k.
// Unit mass per point. Measure i uses stream i.
std::vector<DiscreteMeasure> nestedEllipses(const NestedConfig& cfg);

struct ClusteredConfig {
    std::size_t count = 100;
    std::vector<Point> centers = {{0.5, 0.5}, {0.15, 0.15}, {0.85, 0.15}, {0.15, 0.85}, {0.85, 0.85}};
    std::vector<double> intensities = {2, 1, 1, 1, 1};
    std::size_t pointsPerEllipse = 50;
    std::uint64_t seed = 0;
    double halfWidth = 0.05;  // clusters are boxes center +- halfWidth
    double axisMin = 0.015, axisMax = 0.035;
};

// Per cluster, Poisson(intensity) concentric ellipses confined to the cluster box.
std::vector<DiscreteMeasure> clusteredEllipses(const ClusteredConfig& cfg);

struct DistortionParams {
    double pDel = 0, lambdaDel = 0;
    double pAdd = 0, lambdaAdd = 0;
    Point mAdd{0.5, 0.5};
    double sigmaAdd[2][2] = {{0, 0}, {0, 0}};
    double u0 = 1, u1 = 1;
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    double l = 0, u = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Deletion, addition, position shift, weight change, in that order. The weight
// change touches the surviving points of mu0 only; results are clamped at 1e-9.
std::vector<DiscreteMeasure> distort(const DiscreteMeasure& mu0, const DistortionParams& params, std::size_t count);

// Four unit-density squares of side `side` centred in the quadrants of an n x n pixel grid.
std::vector<DiscreteMeasure> fourSquares(std::size_t n, double side = 0.25);

}  // namespace krbary::synth
