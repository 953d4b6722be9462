#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include <spdlog/spdlog.h>

#include "krbary/barycenter.hpp"
#include "krbary/error.hpp"
#include "parallel.hpp"

namespace krbary {

namespace {

// Cell-centred grid: index i on axis a sits at lo_a + (i + 0.5) (hi_a - lo_a) / K_a.
struct Grid {
    std::vector<double> lo, hi;
    std::vector<std::size_t> K;

    double spacing() const {
        double h = 0;
        for (std::size_t a = 0; a < K.size(); ++a) h = std::max(h, (hi[a] - lo[a]) / double(K[a]));
        return h;
    }
    Point at(const std::vector<std::size_t>& idx) const {
        std::vector<double> x(K.size());
        for (std::size_t a = 0; a < K.size(); ++a) x[a] = lo[a] + (double(idx[a]) + 0.5) * (hi[a] - lo[a]) / double(K[a]);
        return Point(std::move(x));
    }
};

std::pair<std::vector<double>, std::vector<double>> boxFor(const BarycenterProblem& problem,
                                                           const MultiScaleConfig& cfg, std::size_t dim) {
    if (cfg.boundingBox) {
        const auto& [lo, hi] = *cfg.boundingBox;
        if (lo.dim() != dim || hi.dim() != dim) throw ValidationError("bounding box dimension mismatch");
        for (std::size_t a = 0; a < dim; ++a)
            if (!(lo[a] < hi[a])) throw ValidationError("bounding box must have lo < hi on every axis");
        return {lo.coords(), hi.coords()};
    }
    std::vector<double> lo(dim, INFINITY), hi(dim, -INFINITY);
    bool any = false;
    for (const auto& mu : problem.measures)
        for (const Point& x : mu.points()) {
            any = true;
            for (std::size_t a = 0; a < dim; ++a) {
                lo[a] = std::min(lo[a], x[a]);
                hi[a] = std::max(hi[a], x[a]);
            }
        }
    if (!any) throw ValidationError("no support points to place a grid around");
    for (std::size_t a = 0; a < dim; ++a) {
        lo[a] -= problem.C;
        hi[a] += problem.C;
    }
    return {lo, hi};
}

std::string gridName(const std::vector<std::size_t>& K) {
    std::string s;
    for (std::size_t a = 0; a < K.size(); ++a) s += (a ? "x" : "") + std::to_string(K[a]);
    return s;
}

}  // namespace

std::vector<std::size_t> coarsestValidGrid(const BarycenterProblem& problem, const MultiScaleConfig& cfg) {
    std::size_t dim = problem.validate();
    if (cfg.finalGrid.size() != dim) throw ValidationError("grid dimension must match the data");
    for (std::size_t K : cfg.finalGrid)
        if (K == 0) throw ValidationError("grid sizes must be positive");
    auto [lo, hi] = boxFor(problem, cfg, dim);
    std::size_t kmax = 0;
    for (;; ++kmax) {
        bool ok = true;
        for (std::size_t K : cfg.finalGrid) ok = ok && K % (std::size_t{2} << kmax) == 0;
        if (!ok) break;
    }
    for (std::size_t k = kmax + 1; k-- > 0;) {
        Grid g{lo, hi, cfg.finalGrid};
        for (auto& K : g.K) K >>= k;
        if (g.spacing() < problem.C) return g.K;
    }
    throw ValidationError("initial grid too coarse for C");
}

BarycenterSolution solveMultiScale(const BarycenterProblem& problem, const MultiScaleConfig& cfg) {
    std::size_t dim = problem.validate();
    if (cfg.initialGrid.size() != dim || cfg.finalGrid.size() != dim)
        throw ValidationError("grid dimension must match the data");
    if (!(cfg.pruneThreshold >= 0)) throw ValidationError("prune threshold must be non-negative");
    std::size_t levels = 0;
    for (;; ++levels) {
        bool equal = true, over = false;
        for (std::size_t a = 0; a < dim; ++a) {
            if (cfg.initialGrid[a] == 0) throw ValidationError("grid sizes must be positive");
            std::size_t K = cfg.initialGrid[a] << levels;
            equal = equal && K == cfg.finalGrid[a];
            over = over || K > cfg.finalGrid[a];
        }
        if (equal) break;
        if (over || levels > 30) throw ValidationError("final grid must be the initial grid times a power of two");
    }
    auto [lo, hi] = boxFor(problem, cfg, dim);
    Grid grid{lo, hi, cfg.initialGrid};
    if (!(grid.spacing() < problem.C)) throw ValidationError("initial grid too coarse for C");

    std::vector<std::vector<std::size_t>> cells;
    {
        std::vector<std::size_t> idx(dim, 0);
        for (bool more = true; more;) {
            cells.push_back(idx);
            more = false;
            for (std::size_t a = dim; a-- > 0;) {
                if (++idx[a] < grid.K[a]) {
                    more = true;
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    std::vector<TraceEntry> trace;
    BarycenterSolution sol;
    for (std::size_t level = 0;; ++level) {
        std::vector<Point> pts;
        for (const auto& c : cells) pts.push_back(grid.at(c));
        sol = solveFixedSupport(problem, pts);
        TraceEntry e = sol.trace.back();
        e.stage = "grid " + gridName(grid.K);
        e.level = level;
        e.candidates = pts.size();
        trace.push_back(e);
        spdlog::info("multiscale: level {} grid {} candidates {} support {} mass {:.6g} value {:.10g} ({:.2f}s)", level,
                     gridName(grid.K), pts.size(), e.support, e.mass, e.frechetValue, e.seconds);
        if (level == levels) break;

        std::map<Point, double> weight;
        for (std::size_t k = 0; k < sol.barycenter.size(); ++k) weight[sol.barycenter.point(k)] = sol.barycenter.weight(k);
        std::vector<std::vector<std::size_t>> next;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto it = weight.find(pts[c]);
            if (it == weight.end() || it->second <= cfg.pruneThreshold) continue;
            for (std::size_t bits = 0; bits < (std::size_t{1} << dim); ++bits) {
                std::vector<std::size_t> child(dim);
                for (std::size_t a = 0; a < dim; ++a) child[a] = 2 * cells[c][a] + (bits >> a & 1);
                next.push_back(std::move(child));
            }
        }
        cells = std::move(next);
        for (auto& K : grid.K) K *= 2;
    }
    sol.trace = std::move(trace);
    return sol;
}

std::vector<MassCurvePoint> massCurve(const BarycenterProblem& problem, const std::vector<double>& Cvalues,
                                      const MultiScaleConfig& cfg, std::size_t jobs) {
    problem.validate();
    std::vector<MassCurvePoint> out(Cvalues.size());
    detail::parallelFor(Cvalues.size(), jobs, [&](std::size_t k) {
        BarycenterProblem pr = problem;
        pr.C = Cvalues[k];
        pr.validate();
        MultiScaleConfig c = cfg;
        c.initialGrid = coarsestValidGrid(pr, c);
        BarycenterSolution s = solveMultiScale(pr, c);
        out[k] = {pr.C, s.barycenter.totalMass(), s.frechetValue};
    });
    return out;
}

}  // namespace krbary
