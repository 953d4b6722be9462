#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "krbary/measure.hpp"

namespace krbary {

struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

enum class CostKind { EuclideanPower, AugmentedTruncated, ExplicitMatrix, Tree };

// Ground cost d^p. For ExplicitMatrix and Tree the points are one-dimensional
// and their single coordinate is an index into a distance table.
class GroundCost {
public:
    static GroundCost euclideanPower(double p);
    static GroundCost augmentedTruncated(double p, double C);
    static GroundCost explicitMatrix(DenseMatrix distances, double p);
    // Distances between tree nodes; built by ultrametric.hpp.
    static GroundCost treeTable(DenseMatrix distances, double p);

    CostKind kind() const { return kind_; }
    double p() const { return p_; }
    double C() const { return C_; }

    // Plain distance d(x, y) of the underlying metric.
    double distance(const Point& x, const Point& y) const;
    // d^p, truncated at C^p for AugmentedTruncated.
    double operator()(const Point& x, const Point& y) const;
    // Lifted cost; only AugmentedTruncated accepts the dummy point.
    double operator()(const AugmentedPoint& x, const AugmentedPoint& y) const;

private:
    CostKind kind_ = CostKind::EuclideanPower;
    double p_ = 1.0;
    double C_ = 0.0;
    std::shared_ptr<const DenseMatrix> table_;
};

// Cost matrix between the supports of a and b.
DenseMatrix costMatrix(const DiscreteMeasure& a, const DiscreteMeasure& b, const GroundCost& cost);

// Truncated lifted cost, usable without a GroundCost object.
double liftedCost(const AugmentedPoint& x, const AugmentedPoint& y, double p, double C);

}  // namespace krbary
