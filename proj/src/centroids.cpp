#include "krbary/centroids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "krbary/cost.hpp"
#include "krbary/error.hpp"

namespace krbary {

namespace {

double powp(double d, double p) { return p == 1.0 ? d : (p == 2.0 ? d * d : std::pow(d, p)); }

void requireCentroidExponent(double p) {
    if (p != 1.0 && p != 2.0) throw ValidationError("unsupported exponent for centroid enumeration");
}

Point weiszfeld(std::span<const Point> pts) {
    std::size_t d = pts.front().dim();
    auto objective = [&](const std::vector<double>& y) {
        double s = 0;
        for (const Point& x : pts) {
            double q = 0;
            for (std::size_t k = 0; k < d; ++k) q += (x[k] - y[k]) * (x[k] - y[k]);
            s += std::sqrt(q);
        }
        return s;
    };
    std::vector<double> y(d, 0.0), next(d);
    for (const Point& x : pts)
        for (std::size_t k = 0; k < d; ++k) y[k] += x[k] / double(pts.size());
    for (int it = 0; it < 1000; ++it) {
        // Vardi-Zhang step: handles an iterate sitting on a data point.
        std::vector<double> num(d, 0.0), r(d, 0.0);
        double den = 0, coincident = 0;
        for (const Point& x : pts) {
            double q = 0;
            for (std::size_t k = 0; k < d; ++k) q += (x[k] - y[k]) * (x[k] - y[k]);
            double dist = std::sqrt(q);
            if (dist < 1e-15) {
                coincident += 1;
                continue;
            }
            for (std::size_t k = 0; k < d; ++k) {
                num[k] += x[k] / dist;
                r[k] += (x[k] - y[k]) / dist;
            }
            den += 1 / dist;
        }
        if (den == 0) break;
        double rn = 0;
        for (double v : r) rn += v * v;
        rn = std::sqrt(rn);
        if (coincident > 0 && rn <= coincident) break;
        double beta = coincident > 0 ? std::min(1.0, coincident / rn) : 0.0;
        double move = 0;
        for (std::size_t k = 0; k < d; ++k) {
            next[k] = (1 - beta) * num[k] / den + beta * y[k];
            move += (next[k] - y[k]) * (next[k] - y[k]);
        }
        y.swap(next);
        if (std::sqrt(move) < 1e-9) break;
    }
    // A data point can beat an iterate stalled nearby.
    std::vector<double> best = y;
    double bestVal = objective(y);
    for (const Point& x : pts) {
        double v = objective(x.coords());
        if (v < bestVal) {
            bestVal = v;
            best = x.coords();
        }
    }
    return Point(std::move(best));
}

// Buckets points by a 1e-9 lattice and merges those within 1e-9.
class Deduper {
public:
    explicit Deduper(double tol) : tol_(tol) {}

    // Index of an existing point within tol, or npos after inserting x.
    std::size_t find(const Point& x) {
        std::vector<long long> key(x.dim());
        for (std::size_t k = 0; k < x.dim(); ++k) key[k] = static_cast<long long>(std::floor(x[k] / tol_));
        std::size_t hit = std::string::npos;
        std::vector<long long> probe(key.size());
        std::size_t combos = 1;
        for (std::size_t k = 0; k < key.size(); ++k) combos *= 3;
        for (std::size_t c = 0; c < combos && hit == std::string::npos; ++c) {
            std::size_t rest = c;
            for (std::size_t k = 0; k < key.size(); ++k) {
                probe[k] = key[k] + static_cast<long long>(rest % 3) - 1;
                rest /= 3;
            }
            auto it = cells_.find(probe);
            if (it == cells_.end()) continue;
            for (std::size_t idx : it->second)
                if (distance(points_[idx], x) <= tol_) {
                    hit = idx;
                    break;
                }
        }
        if (hit != std::string::npos) return hit;
        cells_[key].push_back(points_.size());
        points_.push_back(x);
        return std::string::npos;
    }

private:
    struct Hash {
        std::size_t operator()(const std::vector<long long>& v) const {
            std::size_t h = 1469598103934665603ULL;
            for (long long x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
            return h;
        }
    };
    double tol_;
    std::vector<Point> points_;
    std::unordered_map<std::vector<long long>, std::vector<std::size_t>, Hash> cells_;
};

CentroidSet enumerate(const BarycenterProblem& problem, std::size_t cap, bool restricted) {
    problem.validate();
    requireCentroidExponent(problem.p);
    std::size_t J = problem.count();
    double tuples = 1;
    for (const auto& m : problem.measures) tuples *= double(m.size() + 1);
    if (tuples > double(cap)) throw GuardError("centroid enumeration too large");

    double cp = powp(problem.C, problem.p);
    CentroidSet out;
    Deduper dedupe(1e-9);
    std::vector<std::size_t> meas, atom;
    std::vector<Point> pts;
    auto visit = [&](auto&& self, std::size_t i) -> void {
        if (i == J) {
            std::size_t L = meas.size();
            if (L == 0 || 2 * L < J) return;
            Point y = barycentricPoint(pts, problem.p);
            if (restricted) {
                double sum = 0;
                for (const Point& x : pts) {
                    double c = powp(distance(x, y), problem.p);
                    if (c > cp * (1 + 1e-12)) return;
                    sum += c;
                }
                if (sum > cp * double(2 * L - J) / 2 * (1 + 1e-12) + 1e-15) return;
            }
            if (dedupe.find(y) == std::string::npos) {
                out.points.push_back(std::move(y));
                out.provenance.push_back({meas, atom});
            }
            return;
        }
        // Remaining measures cannot reach ceil(J/2) any more.
        if (2 * (meas.size() + (J - i)) < J) return;
        self(self, i + 1);
        for (std::size_t k = 0; k < problem.measures[i].size(); ++k) {
            meas.push_back(i);
            atom.push_back(k);
            pts.push_back(problem.measures[i].point(k));
            self(self, i + 1);
            meas.pop_back();
            atom.pop_back();
            pts.pop_back();
        }
    };
    visit(visit, 0);
    return out;
}

}  // namespace

std::size_t BarycenterProblem::validate() const {
    if (measures.empty()) throw ValidationError("at least one measure required");
    if (!(p >= 1) || !std::isfinite(p)) throw ValidationError("exponent p must be >= 1");
    if (!(C > 0) || !std::isfinite(C)) throw ValidationError("C must be positive");
    return commonDimension(measures);
}

double BarycenterProblem::totalInputMass() const {
    double s = 0;
    for (const auto& m : measures) s += m.totalMass();
    return s;
}

Point barycentricPoint(std::span<const Point> points, double p) {
    requireCentroidExponent(p);
    if (points.empty()) throw ValidationError("barycentric point of an empty list");
    std::size_t d = points.front().dim();
    for (const Point& x : points)
        if (x.dim() != d) throw ValidationError("dimension mismatch");
    if (points.size() == 1) return points.front();
    if (p == 2.0) {
        std::vector<double> y(d, 0.0);
        for (const Point& x : points)
            for (std::size_t k = 0; k < d; ++k) y[k] += x[k];
        for (double& v : y) v /= double(points.size());
        return Point(std::move(y));
    }
    if (d == 1) {
        std::vector<double> v;
        for (const Point& x : points) v.push_back(x[0]);
        std::sort(v.begin(), v.end());
        return Point{v[(v.size() - 1) / 2]};
    }
    return weiszfeld(points);
}

CentroidSet fullCentroidSet(const BarycenterProblem& problem, std::size_t cap) {
    return enumerate(problem, cap, false);
}

CentroidSet restrictedCentroidSet(const BarycenterProblem& problem, std::size_t cap) {
    return enumerate(problem, cap, true);
}

double truncatedCost(std::span<const AugmentedPoint> inputs, const AugmentedPoint& y, double p, double C) {
    double s = 0;
    for (const auto& x : inputs) s += liftedCost(x, y, p, C);
    return s;
}

AugmentedPoint truncatedBarycentricPoint(std::span<const AugmentedPoint> inputs, double p, double C) {
    requireCentroidExponent(p);
    if (inputs.size() > 16) throw GuardError("combinatorial centroid too large");
    if (!(C > 0)) throw ValidationError("C must be positive");
    std::vector<Point> real;
    for (const auto& x : inputs)
        if (!isDummy(x)) real.push_back(std::get<Point>(x));
    if (real.empty()) return DummyPoint{};

    double cp = powp(C, p);
    double dummyValue = 0.5 * cp * double(real.size());
    double tol = 1e-12 * cp * double(inputs.size());
    std::size_t R = real.size();
    double bestVal = std::numeric_limits<double>::infinity();
    Point best;
    std::vector<Point> sub;
    for (std::size_t mask = 1; mask < (std::size_t{1} << R); ++mask) {
        sub.clear();
        for (std::size_t k = 0; k < R; ++k)
            if (mask >> k & 1) sub.push_back(real[k]);
        Point y = barycentricPoint(sub, p);
        double v = truncatedCost(inputs, y, p, C);
        if (v < bestVal - tol) {
            bestVal = v;
            best = std::move(y);
        } else if (v <= bestVal + tol && y < best) {
            bestVal = std::min(bestVal, v);
            best = std::move(y);
        }
    }
    if (dummyValue <= bestVal + tol) return DummyPoint{};

    // Recentre on the inputs within C until stable; never increases the objective.
    for (int it = 0; it < 64; ++it) {
        sub.clear();
        for (const Point& x : real)
            if (distance(x, best) <= C) sub.push_back(x);
        if (sub.empty()) break;
        Point y = barycentricPoint(sub, p);
        if (y == best) break;
        if (truncatedCost(inputs, y, p, C) > truncatedCost(inputs, best, p, C) + tol) break;
        best = std::move(y);
    }
    return best;
}

}  // namespace krbary
