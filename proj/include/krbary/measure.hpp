#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace krbary {

class Point {
public:
    Point() = default;
    explicit Point(std::vector<double> coords);
    Point(std::initializer_list<double> coords);

    std::size_t dim() const { return c_.size(); }
    double operator[](std::size_t k) const { return c_[k]; }
    const std::vector<double>& coords() const { return c_; }

    auto operator<=>(const Point&) const = default;

private:
    std::vector<double> c_;
};

double distance(const Point& a, const Point& b);
double squaredDistance(const Point& a, const Point& b);

// Finite non-negative measure on R^d. Atoms are distinct and strictly positive:
// weights below kWeightFloor are dropped and repeated points are merged, keeping
// the position of the first occurrence.
class DiscreteMeasure {
public:
    static constexpr double kWeightFloor = 1e-12;

    DiscreteMeasure() = default;
    DiscreteMeasure(std::vector<Point> points, std::vector<double> weights, std::string id = {});

    static DiscreteMeasure empty(std::size_t dim);
    static DiscreteMeasure dirac(const Point& x, double w);

    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    // 0 for an empty measure built without a dimension.
    std::size_t dim() const { return dim_; }
    const Point& point(std::size_t i) const { return pts_[i]; }
    double weight(std::size_t i) const { return w_[i]; }
    const std::vector<Point>& points() const { return pts_; }
    const std::vector<double>& weights() const { return w_; }
    const std::string& id() const { return id_; }
    double totalMass() const { return mass_; }

    DiscreteMeasure withId(std::string id) const;
    DiscreteMeasure scaled(double factor) const;

private:
    std::vector<Point> pts_;
    std::vector<double> w_;
    std::string id_;
    std::size_t dim_ = 0;
    double mass_ = 0.0;
};

double totalMass(const DiscreteMeasure& mu);
// (1/2) sum_x |mu(x) - nu(x)| over the union of supports.
double totalVariation(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
// Pointwise sum.
DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b);

// Shared dimension of a family, ignoring dimensionless empty measures.
// Throws "dimension mismatch".
std::size_t commonDimension(std::span<const DiscreteMeasure> measures);
void requireSameDimension(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct DummyPoint {
    auto operator<=>(const DummyPoint&) const = default;
};

using AugmentedPoint = std::variant<DummyPoint, Point>;

inline bool isDummy(const AugmentedPoint& x) { return std::holds_alternative<DummyPoint>(x); }

// A measure on Y plus an atom at the dummy point.
struct AugmentedMeasure {
    DiscreteMeasure base;
    double dummyWeight = 0.0;

    double totalMass() const { return base.totalMass() + dummyWeight; }
    const DiscreteMeasure& restrictToSpace() const { return base; }
};

// mu + (targetMass - M(mu)) delta_dummy. Throws "insufficient padding mass".
AugmentedMeasure augmentMeasure(const DiscreteMeasure& mu, double targetMass);

}  // namespace krbary
