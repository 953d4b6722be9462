#include "krbary/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "krbary/cost.hpp"
#include "krbary/error.hpp"

namespace krbary {

Point::Point(std::vector<double> coords) : c_(std::move(coords)) {
    for (double v : c_)
        if (!std::isfinite(v)) throw ValidationError("non-finite coordinate");
}

Point::Point(std::initializer_list<double> coords) : Point(std::vector<double>(coords)) {}

double squaredDistance(const Point& a, const Point& b) {
    if (a.dim() != b.dim()) throw ValidationError("dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.dim(); ++k) {
        double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

double distance(const Point& a, const Point& b) { return std::sqrt(squaredDistance(a, b)); }

DiscreteMeasure::DiscreteMeasure(std::vector<Point> points, std::vector<double> weights, std::string id)
    : id_(std::move(id)) {
    if (points.size() != weights.size()) throw ValidationError("points and weights differ in length");
    if (!points.empty()) {
        dim_ = points.front().dim();
        if (dim_ == 0) throw ValidationError("points need at least one coordinate");
    }
    std::map<Point, std::size_t> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double w = weights[i];
        if (!std::isfinite(w) || w < 0) throw ValidationError("invalid weights");
        if (points[i].dim() != dim_) throw ValidationError("dimension mismatch");
        if (w < kWeightFloor) continue;
        auto [it, fresh] = seen.emplace(points[i], pts_.size());
        if (fresh) {
            pts_.push_back(std::move(points[i]));
            w_.push_back(w);
        } else {
            w_[it->second] += w;
        }
    }
    for (double w : w_) mass_ += w;
}

DiscreteMeasure DiscreteMeasure::empty(std::size_t dim) {
    DiscreteMeasure m;
    m.dim_ = dim;
    return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x, double w) { return DiscreteMeasure({x}, {w}); }

DiscreteMeasure DiscreteMeasure::withId(std::string id) const {
    DiscreteMeasure m = *this;
    m.id_ = std::move(id);
    return m;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
    std::vector<double> w = w_;
    for (double& v : w) v *= factor;
    DiscreteMeasure m(pts_, std::move(w), id_);
    if (m.empty()) m.dim_ = dim_;
    return m;
}

double totalMass(const DiscreteMeasure& mu) { return mu.totalMass(); }

double totalVariation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    requireSameDimension(mu, nu);
    std::map<Point, double> diff;
    for (std::size_t i = 0; i < mu.size(); ++i) diff[mu.point(i)] += mu.weight(i);
    for (std::size_t j = 0; j < nu.size(); ++j) diff[nu.point(j)] -= nu.weight(j);
    double s = 0.0;
    for (const auto& [x, v] : diff) s += std::abs(v);
    return 0.5 * s;
}

DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    requireSameDimension(a, b);
    std::vector<Point> pts = a.points();
    std::vector<double> w = a.weights();
    pts.insert(pts.end(), b.points().begin(), b.points().end());
    w.insert(w.end(), b.weights().begin(), b.weights().end());
    DiscreteMeasure m(std::move(pts), std::move(w));
    if (m.empty()) return DiscreteMeasure::empty(std::max(a.dim(), b.dim()));
    return m;
}

std::size_t commonDimension(std::span<const DiscreteMeasure> measures) {
    std::size_t d = 0;
    for (const auto& m : measures) {
        if (m.dim() == 0) continue;
        if (d == 0) d = m.dim();
        else if (m.dim() != d) throw ValidationError("dimension mismatch");
    }
    return d;
}

void requireSameDimension(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.dim() != 0 && b.dim() != 0 && a.dim() != b.dim()) throw ValidationError("dimension mismatch");
}

AugmentedMeasure augmentMeasure(const DiscreteMeasure& mu, double targetMass) {
    double m = mu.totalMass();
    if (!(targetMass >= m - 1e-12 * std::max(1.0, m))) throw ValidationError("insufficient padding mass");
    return {mu, std::max(0.0, targetMass - m)};
}

// ---- ground costs ----

GroundCost GroundCost::euclideanPower(double p) {
    if (!(p >= 1)) throw ValidationError("exponent p must be >= 1");
    GroundCost g;
    g.kind_ = CostKind::EuclideanPower;
    g.p_ = p;
    return g;
}

GroundCost GroundCost::augmentedTruncated(double p, double C) {
    if (!(p >= 1)) throw ValidationError("exponent p must be >= 1");
    if (!(C > 0) || !std::isfinite(C)) throw ValidationError("C must be positive");
    GroundCost g;
    g.kind_ = CostKind::AugmentedTruncated;
    g.p_ = p;
    g.C_ = C;
    return g;
}

static void checkTable(const DenseMatrix& t) {
    if (t.rows != t.cols) throw ValidationError("distance table must be square");
    for (double v : t.data)
        if (std::isnan(v) || v < 0) throw ValidationError("invalid cost");
}

GroundCost GroundCost::explicitMatrix(DenseMatrix distances, double p) {
    checkTable(distances);
    GroundCost g = euclideanPower(p);
    g.kind_ = CostKind::ExplicitMatrix;
    g.table_ = std::make_shared<const DenseMatrix>(std::move(distances));
    return g;
}

GroundCost GroundCost::treeTable(DenseMatrix distances, double p) {
    GroundCost g = explicitMatrix(std::move(distances), p);
    g.kind_ = CostKind::Tree;
    return g;
}

double GroundCost::distance(const Point& x, const Point& y) const {
    if (table_) {
        if (x.dim() != 1 || y.dim() != 1) throw ValidationError("dimension mismatch");
        auto i = static_cast<std::size_t>(x[0]), j = static_cast<std::size_t>(y[0]);
        if (x[0] < 0 || y[0] < 0 || i >= table_->rows || j >= table_->cols || double(i) != x[0] ||
            double(j) != y[0])
            throw ValidationError("unknown node id");
        return (*table_)(i, j);
    }
    return krbary::distance(x, y);
}

double GroundCost::operator()(const Point& x, const Point& y) const {
    double d = distance(x, y);
    double c = p_ == 1.0 ? d : (p_ == 2.0 ? d * d : std::pow(d, p_));
    if (kind_ == CostKind::AugmentedTruncated) c = std::min(c, std::pow(C_, p_));
    return c;
}

double GroundCost::operator()(const AugmentedPoint& x, const AugmentedPoint& y) const {
    bool dx = isDummy(x), dy = isDummy(y);
    if (!dx && !dy) return (*this)(std::get<Point>(x), std::get<Point>(y));
    if (kind_ != CostKind::AugmentedTruncated) throw ValidationError("dummy point needs the augmented cost");
    if (dx && dy) return 0.0;
    return 0.5 * std::pow(C_, p_);
}

DenseMatrix costMatrix(const DiscreteMeasure& a, const DiscreteMeasure& b, const GroundCost& cost) {
    requireSameDimension(a, b);
    DenseMatrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = cost(a.point(i), b.point(j));
    return m;
}

double liftedCost(const AugmentedPoint& x, const AugmentedPoint& y, double p, double C) {
    bool dx = isDummy(x), dy = isDummy(y);
    if (dx && dy) return 0.0;
    double cp = std::pow(C, p);
    if (dx || dy) return 0.5 * cp;
    return std::min(std::pow(distance(std::get<Point>(x), std::get<Point>(y)), p), cp);
}

}  // namespace krbary
