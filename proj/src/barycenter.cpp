#include "krbary/barycenter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "krbary/error.hpp"
#include "krbary/lp.hpp"
#include "parallel.hpp"

namespace krbary {

namespace {

double powp(double d, double p) { return p == 1.0 ? d : (p == 2.0 ? d * d : std::pow(d, p)); }

double secondsSince(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double clampWeight(double w) { return w > DiscreteMeasure::kWeightFloor ? w : 0.0; }

DiscreteMeasure buildMeasure(std::vector<Point> pts, std::vector<double> w, std::size_t dim) {
    if (pts.empty()) return DiscreteMeasure::empty(dim);
    DiscreteMeasure m(std::move(pts), std::move(w));
    return m.empty() ? DiscreteMeasure::empty(dim) : m;
}

void fillPlans(const BarycenterProblem& problem, BarycenterSolution& sol) {
    sol.plans.clear();
    double total = 0;
    for (const auto& mu : problem.measures) {
        sol.plans.push_back(uot(sol.barycenter, mu, problem.p, problem.C));
        total += sol.plans.back().value;
    }
    sol.frechetValue = total / double(problem.count());
}

lp::Result runLp(const lp::Model& model, std::vector<std::size_t> warm) {
    lp::Options opt;
    opt.warmBasis = std::move(warm);
    lp::Result r = lp::solve(model, opt);
    if (r.status != lp::Status::Optimal) throw SolverError("barycenter LP did not reach optimality");
    return r;
}

// Mixed-radix enumeration of tuples (k_1, ..., k_J), k_i < sizes[i].
struct Odometer {
    std::vector<std::size_t> sizes, digits;
    explicit Odometer(std::vector<std::size_t> s) : sizes(std::move(s)), digits(sizes.size(), 0) {}
    bool advance() {
        for (std::size_t i = sizes.size(); i-- > 0;) {
            if (++digits[i] < sizes[i]) return true;
            digits[i] = 0;
        }
        return false;
    }
    std::size_t index(const std::vector<std::size_t>& d) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) idx = idx * sizes[i] + d[i];
        return idx;
    }
};

double tupleCount(const std::vector<std::size_t>& sizes) {
    double t = 1;
    for (std::size_t s : sizes) t *= double(s);
    return t;
}

}  // namespace

double frechetValue(const BarycenterProblem& problem, const DiscreteMeasure& mu) {
    problem.validate();
    double total = 0;
    for (const auto& m : problem.measures) total += uot(mu, m, problem.p, problem.C).value;
    return total / double(problem.count());
}

double augmentedFrechetValue(const BarycenterProblem& problem, const DiscreteMeasure& mu) {
    problem.validate();
    double B = problem.totalInputMass();
    if (mu.totalMass() > B * (1 + 1e-12)) throw ValidationError("insufficient padding mass");
    double total = 0;
    for (const auto& m : problem.measures) total += liftedValue(mu, m, problem.p, problem.C, B);
    return total / double(problem.count());
}

BarycenterSolution solveFixedSupport(const BarycenterProblem& problem, const std::vector<Point>& support) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t dim = problem.validate();
    for (const Point& s : support)
        if (dim != 0 && s.dim() != dim) throw ValidationError("dimension mismatch");
    const std::size_t J = problem.count();
    const double p = problem.p, C = problem.C, cp = powp(C, p);

    // Distinct support points that at least J/2 measures can reach.
    std::vector<Point> kept;
    std::set<Point> seen;
    for (const Point& s : support) {
        if (!seen.insert(s).second) continue;
        std::size_t reach = 0;
        for (const auto& mu : problem.measures)
            for (const Point& x : mu.points())
                if (distance(s, x) <= C) {
                    ++reach;
                    break;
                }
        if (2 * reach >= J) kept.push_back(s);
    }
    const std::size_t S = kept.size();

    double B = 3.0 * problem.totalInputMass();
    if (B == 0) B = 1.0;

    std::size_t rowsA = J * (S + 1);
    std::vector<std::size_t> offB(J);
    std::size_t rows = rowsA;
    for (std::size_t i = 0; i < J; ++i) {
        offB[i] = rows;
        rows += problem.measures[i].size() + 1;
    }
    lp::Model model(rows);
    for (std::size_t i = 0; i < J; ++i) {
        const auto& mu = problem.measures[i];
        for (std::size_t k = 0; k < mu.size(); ++k) model.setRhs(offB[i] + k, mu.weight(k));
        model.setRhs(offB[i] + mu.size(), B - mu.totalMass());
    }

    std::vector<lp::Entry> col;
    for (std::size_t s = 0; s <= S; ++s) {
        col.clear();
        for (std::size_t i = 0; i < J; ++i) col.push_back({i * (S + 1) + s, -1.0});
        model.addColumn(0.0, col);
    }
    std::vector<std::size_t> warm{S};
    const double invJ = 1.0 / double(J);
    for (std::size_t i = 0; i < J; ++i) {
        const auto& mu = problem.measures[i];
        std::size_t M = mu.size();
        auto arc = [&](std::size_t s, std::size_t k, double c) {
            lp::Entry e[2] = {{i * (S + 1) + s, 1.0}, {offB[i] + k, 1.0}};
            return model.addColumn(c * invJ, e);
        };
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t k = 0; k < M; ++k) {
                double d = distance(kept[s], mu.point(k));
                if (d <= C) arc(s, k, powp(d, p));
            }
            arc(s, M, cp / 2);
        }
        for (std::size_t k = 0; k < M; ++k) warm.push_back(arc(S, k, cp / 2));
        warm.push_back(arc(S, M, 0.0));
    }

    lp::Result r = runLp(model, std::move(warm));
    std::vector<double> w(S);
    for (std::size_t s = 0; s < S; ++s) w[s] = clampWeight(r.x[s]);

    BarycenterSolution sol;
    sol.barycenter = buildMeasure(kept, std::move(w), dim);
    sol.solverValue = r.objective;
    fillPlans(problem, sol);
    sol.trace.push_back({"fixed-support", 0, S, sol.barycenter.size(), sol.barycenter.totalMass(), sol.frechetValue,
                         r.iterations, secondsSince(t0)});
    return sol;
}

BarycenterSolution solveCentroidLp(const BarycenterProblem& problem, std::size_t cap) {
    auto t0 = std::chrono::steady_clock::now();
    CentroidSet cs = restrictedCentroidSet(problem, cap);
    double enumTime = secondsSince(t0);
    BarycenterSolution sol = solveFixedSupport(problem, cs.points);
    sol.trace.insert(sol.trace.begin(), {"centroid-enumeration", 0, cs.points.size(), 0, 0.0, 0.0, 0, enumTime});
    return sol;
}

BarycenterSolution solveMultiMarginal(const BarycenterProblem& problem, double cap) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t dim = problem.validate();
    const std::size_t J = problem.count();
    const double p = problem.p, C = problem.C;
    if (J > 16) throw GuardError("combinatorial centroid too large");
    std::vector<std::size_t> sizes;
    for (const auto& mu : problem.measures) sizes.push_back(mu.size() + 1);
    if (tupleCount(sizes) > cap) throw GuardError("multi-marginal problem too large");

    double B = 2.0 * problem.totalInputMass();
    if (B == 0) B = 1.0;
    std::vector<std::size_t> off(J);
    std::size_t rows = 0;
    for (std::size_t i = 0; i < J; ++i) {
        off[i] = rows;
        rows += sizes[i];
    }
    lp::Model model(rows);
    for (std::size_t i = 0; i < J; ++i) {
        const auto& mu = problem.measures[i];
        for (std::size_t k = 0; k < mu.size(); ++k) model.setRhs(off[i] + k, mu.weight(k));
        model.setRhs(off[i] + mu.size(), B - mu.totalMass());
    }

    Odometer odo(sizes);
    std::vector<AugmentedPoint> centre;
    std::vector<AugmentedPoint> inputs(J);
    std::vector<lp::Entry> col(J);
    std::vector<std::size_t> warm;
    do {
        std::size_t real = 0;
        for (std::size_t i = 0; i < J; ++i) {
            std::size_t k = odo.digits[i];
            if (k == problem.measures[i].size()) {
                inputs[i] = DummyPoint{};
            } else {
                inputs[i] = problem.measures[i].point(k);
                ++real;
            }
            col[i] = {off[i] + k, 1.0};
        }
        AugmentedPoint y = truncatedBarycentricPoint(inputs, p, C);
        std::size_t j = model.addColumn(truncatedCost(inputs, y, p, C) / double(J), col);
        if (real <= 1) warm.push_back(j);
        centre.push_back(std::move(y));
    } while (odo.advance());

    lp::Result r = runLp(model, std::move(warm));

    // Push the multi-coupling forward; merge centres closer than 1e-9.
    std::vector<Point> pts;
    std::vector<double> w;
    std::vector<std::size_t> atomOf(centre.size(), SIZE_MAX);
    for (std::size_t t = 0; t < centre.size(); ++t) {
        if (r.x[t] <= 0 || isDummy(centre[t])) continue;
        const Point& y = std::get<Point>(centre[t]);
        std::size_t a = 0;
        while (a < pts.size() && distance(pts[a], y) > 1e-9) ++a;
        if (a == pts.size()) {
            pts.push_back(y);
            w.push_back(0.0);
        }
        w[a] += r.x[t];
        atomOf[t] = a;
    }
    std::vector<std::size_t> remap(pts.size(), SIZE_MAX);
    std::vector<Point> keptPts;
    std::vector<double> keptW;
    for (std::size_t a = 0; a < pts.size(); ++a)
        if (clampWeight(w[a]) > 0) {
            remap[a] = keptPts.size();
            keptPts.push_back(pts[a]);
            keptW.push_back(w[a]);
        }

    BarycenterSolution sol;
    sol.barycenter = buildMeasure(keptPts, keptW, dim);
    sol.solverValue = r.objective;

    // Per-input plans read off the multi-coupling; pairs farther than C are
    // created and destroyed rather than moved.
    double cp = powp(C, p);
    for (std::size_t i = 0; i < J; ++i) {
        const auto& mu = problem.measures[i];
        std::map<std::pair<std::size_t, std::size_t>, double> acc;
        odo.digits.assign(J, 0);
        std::size_t t = 0;
        do {
            std::size_t k = odo.digits[i];
            if (atomOf[t] != SIZE_MAX && remap[atomOf[t]] != SIZE_MAX && k < mu.size()) {
                std::size_t a = remap[atomOf[t]];
                if (distance(sol.barycenter.point(a), mu.point(k)) <= C) acc[{a, k}] += r.x[t];
            }
            ++t;
        } while (odo.advance());
        UotResult u;
        u.p = p;
        u.C = C;
        u.mu = sol.barycenter;
        u.nu = mu;
        u.plan.rowMarginals.assign(sol.barycenter.size(), 0.0);
        u.plan.colMarginals.assign(mu.size(), 0.0);
        for (const auto& [key, m] : acc) {
            u.plan.entries.push_back({key.first, key.second, m});
            u.plan.rowMarginals[key.first] += m;
            u.plan.colMarginals[key.second] += m;
            u.plan.objective += powp(distance(sol.barycenter.point(key.first), mu.point(key.second)), p) * m;
        }
        double moved = u.plan.totalMass();
        u.destroyedMass = sol.barycenter.totalMass() - moved;
        u.createdMass = mu.totalMass() - moved;
        u.value = u.plan.objective + cp / 2 * (u.destroyedMass + u.createdMass);
        u.krDistance = std::pow(std::max(u.value, 0.0), 1.0 / p);
        sol.plans.push_back(std::move(u));
    }
    sol.frechetValue = frechetValue(problem, sol.barycenter);
    sol.trace.push_back({"multi-marginal", 0, centre.size(), sol.barycenter.size(), sol.barycenter.totalMass(),
                         sol.frechetValue, r.iterations, secondsSince(t0)});
    return sol;
}

double wassersteinBarycenterValue(const BarycenterProblem& problem, double cap) {
    problem.validate();
    const std::size_t J = problem.count();
    double m0 = problem.measures[0].totalMass();
    for (const auto& mu : problem.measures)
        if (std::abs(mu.totalMass() - m0) > 1e-9 * std::max(1.0, m0)) throw ValidationError("unbalanced input");
    if (m0 == 0) return 0.0;
    std::vector<std::size_t> sizes;
    for (const auto& mu : problem.measures) sizes.push_back(mu.size());
    if (tupleCount(sizes) > cap) throw GuardError("multi-marginal problem too large");

    std::vector<std::size_t> off(J);
    std::size_t rows = 0;
    for (std::size_t i = 0; i < J; ++i) {
        off[i] = rows;
        rows += sizes[i];
    }
    lp::Model model(rows);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t k = 0; k < sizes[i]; ++k)
            model.setRhs(off[i] + k, problem.measures[i].weight(k) * m0 / problem.measures[i].totalMass());

    Odometer odo(sizes);
    std::vector<Point> pts(J);
    std::vector<lp::Entry> col(J);
    do {
        for (std::size_t i = 0; i < J; ++i) {
            pts[i] = problem.measures[i].point(odo.digits[i]);
            col[i] = {off[i] + odo.digits[i], 1.0};
        }
        Point y = barycentricPoint(pts, problem.p);
        double c = 0;
        for (const Point& x : pts) c += powp(distance(x, y), problem.p);
        model.addColumn(c / double(J), col);
    } while (odo.advance());

    // North-west corner start.
    std::vector<std::size_t> warm, k(J, 0);
    std::vector<double> left(J);
    for (std::size_t i = 0; i < J; ++i) left[i] = model.rhs(off[i]);
    for (bool more = true; more;) {
        warm.push_back(odo.index(k));
        double m = *std::min_element(left.begin(), left.end());
        for (std::size_t i = 0; i < J; ++i) {
            left[i] -= m;
            if (left[i] > 1e-15 * m0) continue;
            if (k[i] + 1 == sizes[i]) {
                more = false;
                continue;
            }
            left[i] = model.rhs(off[i] + ++k[i]);
        }
    }
    return runLp(model, std::move(warm)).objective;
}

DiscreteMeasure medianBarycenter(const BarycenterProblem& problem) {
    std::size_t dim = problem.validate();
    const std::size_t J = problem.count();
    std::vector<Point> pts;
    std::map<Point, std::size_t> index;
    std::vector<std::vector<double>> vals;
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t k = 0; k < problem.measures[i].size(); ++k) {
            const Point& x = problem.measures[i].point(k);
            auto [it, fresh] = index.emplace(x, pts.size());
            if (fresh) {
                pts.push_back(x);
                vals.emplace_back(J, 0.0);
            }
            vals[it->second][i] = problem.measures[i].weight(k);
        }
    std::vector<double> w;
    for (auto& v : vals) {
        std::sort(v.begin(), v.end());
        w.push_back(v[(J - 1) / 2]);
    }
    return buildMeasure(std::move(pts), std::move(w), dim);
}

std::vector<std::vector<Point>> clustersFromBoxes(const BarycenterProblem& problem,
                                                  const std::vector<std::pair<Point, Point>>& boxes) {
    std::size_t dim = problem.validate();
    std::vector<std::vector<Point>> out(boxes.size());
    std::vector<std::set<Point>> seen(boxes.size());
    for (const auto& [lo, hi] : boxes)
        if (lo.dim() != dim || hi.dim() != dim) throw ValidationError("dimension mismatch");
    for (const auto& mu : problem.measures)
        for (const Point& x : mu.points()) {
            std::size_t r = 0;
            for (; r < boxes.size(); ++r) {
                bool inside = true;
                for (std::size_t k = 0; k < dim; ++k)
                    inside = inside && boxes[r].first[k] <= x[k] && x[k] <= boxes[r].second[k];
                if (inside) break;
            }
            if (r == boxes.size()) throw ValidationError("cluster preconditions failed: point outside every box");
            if (seen[r].insert(x).second) out[r].push_back(x);
        }
    return out;
}

BarycenterSolution clusterDecompose(const BarycenterProblem& problem, const std::vector<std::vector<Point>>& clusters,
                                    ClusterSolver solver, const MultiScaleConfig& cfg, std::size_t jobs) {
    auto t0 = std::chrono::steady_clock::now();
    std::size_t dim = problem.validate();
    const double C = problem.C;
    std::map<Point, std::size_t> owner;
    for (std::size_t r = 0; r < clusters.size(); ++r)
        for (const Point& x : clusters[r]) {
            if (x.dim() != dim) throw ValidationError("dimension mismatch");
            auto [it, fresh] = owner.emplace(x, r);
            if (!fresh && it->second != r) throw ValidationError("cluster preconditions failed: clusters overlap");
        }
    double sep = std::pow(2.0, 1.0 / problem.p) * C;
    for (std::size_t r = 0; r < clusters.size(); ++r)
        for (std::size_t a = 0; a < clusters[r].size(); ++a) {
            for (std::size_t b = a + 1; b < clusters[r].size(); ++b)
                if (distance(clusters[r][a], clusters[r][b]) > C)
                    throw ValidationError("cluster preconditions failed: diameter exceeds C");
            for (std::size_t s = r + 1; s < clusters.size(); ++s)
                for (const Point& y : clusters[s])
                    if (distance(clusters[r][a], y) <= sep)
                        throw ValidationError("cluster preconditions failed: clusters closer than 2^(1/p) C");
        }

    const std::size_t R = clusters.size();
    std::vector<BarycenterProblem> sub(R, BarycenterProblem{{}, problem.p, C});
    for (const auto& mu : problem.measures) {
        std::vector<std::vector<Point>> pts(R);
        std::vector<std::vector<double>> w(R);
        for (std::size_t k = 0; k < mu.size(); ++k) {
            auto it = owner.find(mu.point(k));
            if (it == owner.end()) throw ValidationError("cluster preconditions failed: support point in no cluster");
            pts[it->second].push_back(mu.point(k));
            w[it->second].push_back(mu.weight(k));
        }
        for (std::size_t r = 0; r < R; ++r) sub[r].measures.push_back(buildMeasure(pts[r], w[r], dim));
    }

    std::vector<BarycenterSolution> parts(R);
    detail::parallelFor(R, jobs, [&](std::size_t r) {
        if (sub[r].totalInputMass() == 0) {
            parts[r].barycenter = DiscreteMeasure::empty(dim);
            return;
        }
        switch (solver) {
            case ClusterSolver::MultiMarginal: parts[r] = solveMultiMarginal(sub[r]); break;
            case ClusterSolver::CentroidLp: parts[r] = solveCentroidLp(sub[r]); break;
            case ClusterSolver::MultiScale: {
                MultiScaleConfig c = cfg;
                c.boundingBox.reset();
                c.initialGrid = coarsestValidGrid(sub[r], c);
                parts[r] = solveMultiScale(sub[r], c);
                break;
            }
        }
    });

    BarycenterSolution sol;
    sol.barycenter = DiscreteMeasure::empty(dim);
    for (std::size_t r = 0; r < R; ++r) {
        sol.barycenter = sol.barycenter + parts[r].barycenter;
        sol.solverValue += parts[r].solverValue;
        for (auto e : parts[r].trace) {
            e.stage = "cluster " + std::to_string(r) + ": " + e.stage;
            sol.trace.push_back(std::move(e));
        }
    }
    fillPlans(problem, sol);
    sol.trace.push_back({"cluster-merge", 0, R, sol.barycenter.size(), sol.barycenter.totalMass(), sol.frechetValue, 0,
                         secondsSince(t0)});
    return sol;
}

}  // namespace krbary
