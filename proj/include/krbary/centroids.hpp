#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "krbary/measure.hpp"

namespace krbary {

struct BarycenterProblem {
    std::vector<DiscreteMeasure> measures;
    double p = 2.0;
    double C = 1.0;

    std::size_t count() const { return measures.size(); }
    // Shared dimension; throws on mismatch, on J = 0 and on bad p or C.
    std::size_t validate() const;
    double totalInputMass() const;
};

// Minimizer of sum_i d^p(x_i, y) for p in {1, 2}: the mean for p = 2, the
// geometric median for p = 1 (lower median in one dimension).
Point barycentricPoint(std::span<const Point> points, double p);

struct CentroidSet {
    struct Source {
        std::vector<std::size_t> measures;  // increasing measure indices
        std::vector<std::size_t> atoms;     // atom index within each measure
    };
    std::vector<Point> points;
    std::vector<Source> provenance;  // first tuple producing each point
};

inline constexpr std::size_t kDefaultCentroidCap = 2'000'000;

// All barycentric points of tuples drawn from at least ceil(J/2) distinct measures.
// Points closer than 1e-9 are merged.
CentroidSet fullCentroidSet(const BarycenterProblem& problem, std::size_t cap = kDefaultCentroidCap);
// Keeps the tuples whose points are within C of the centroid and whose summed
// cost is at most C^p (2L - J) / 2.
CentroidSet restrictedCentroidSet(const BarycenterProblem& problem, std::size_t cap = kDefaultCentroidCap);

// Minimizer of sum_i min(d^p, C^p) over the augmented space, by enumerating
// subsets of the real inputs. Ties go to the dummy point, then to the smallest
// point in lexicographic order. The returned point is the barycentric point of
// exactly those inputs within distance C of it.
AugmentedPoint truncatedBarycentricPoint(std::span<const AugmentedPoint> inputs, double p, double C);

// Truncated objective sum_i d~^p_C(y_i, y).
double truncatedCost(std::span<const AugmentedPoint> inputs, const AugmentedPoint& y, double p, double C);

}  // namespace krbary
