#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "krbary/centroids.hpp"
#include "krbary/kr_distance.hpp"
#include "krbary/measure.hpp"

namespace krbary {

struct TraceEntry {
    std::string stage;
    std::size_t level = 0;
    std::size_t candidates = 0;  // support points offered to the solver
    std::size_t support = 0;     // atoms of the result
    double mass = 0.0;
    double frechetValue = 0.0;
    std::size_t iterations = 0;
    double seconds = 0.0;
};

struct BarycenterSolution {
    DiscreteMeasure barycenter;
    // (1/J) sum_i UOT(barycenter, mu_i), recomputed with the exact solver.
    double frechetValue = 0.0;
    // Optimal value reported by the underlying LP.
    double solverValue = 0.0;
    // One plan per input. Plans rebuilt from a multi-coupling carry no duals.
    std::vector<UotResult> plans;
    std::vector<TraceEntry> trace;
};

// F_{p,C}(mu) = (1/J) sum_i UOT_{p,C}(mu, mu_i).
double frechetValue(const BarycenterProblem& problem, const DiscreteMeasure& mu);
// Same functional on the lifted space with every measure padded to sum_i M(mu_i);
// requires M(mu) <= sum_i M(mu_i).
double augmentedFrechetValue(const BarycenterProblem& problem, const DiscreteMeasure& mu);

// Best weights on `support` plus the dummy point. Support points within C of
// atoms of fewer than J/2 measures are dropped first; they never carry mass.
BarycenterSolution solveFixedSupport(const BarycenterProblem& problem, const std::vector<Point>& support);

// Fixed-support LP on the restricted centroid set; exact for p in {1, 2}.
BarycenterSolution solveCentroidLp(const BarycenterProblem& problem, std::size_t cap = kDefaultCentroidCap);

inline constexpr double kMultiMarginalCap = 1e5;

// Multi-marginal LP over the augmented supports; exact oracle for small inputs.
BarycenterSolution solveMultiMarginal(const BarycenterProblem& problem, double cap = kMultiMarginalCap);

// Optimal value of the balanced p-Wasserstein barycenter problem (uniform
// weights, no dummy point). Inputs must share their total mass.
double wassersteinBarycenterValue(const BarycenterProblem& problem, double cap = kMultiMarginalCap);

// sum_x med(mu_1(x), ..., mu_J(x)) delta_x, lower median for even J.
DiscreteMeasure medianBarycenter(const BarycenterProblem& problem);

struct MultiScaleConfig {
    std::vector<std::size_t> initialGrid{16, 16};
    std::vector<std::size_t> finalGrid{128, 128};
    double pruneThreshold = 1e-5;
    // Axis-aligned box; default is the hull of all supports padded by C.
    std::optional<std::pair<Point, Point>> boundingBox;
};

BarycenterSolution solveMultiScale(const BarycenterProblem& problem, const MultiScaleConfig& cfg);

// Coarsest grid of the form final / 2^k whose spacing is below C.
std::vector<std::size_t> coarsestValidGrid(const BarycenterProblem& problem, const MultiScaleConfig& cfg);

struct MassCurvePoint {
    double C = 0.0;
    double mass = 0.0;
    double frechetValue = 0.0;
};

// Multi-scale solves over C values, each started from coarsestValidGrid.
// Runs up to `jobs` solves at once.
std::vector<MassCurvePoint> massCurve(const BarycenterProblem& problem, const std::vector<double>& Cvalues,
                                      const MultiScaleConfig& cfg, std::size_t jobs = 1);

enum class ClusterSolver { MultiMarginal, CentroidLp, MultiScale };

// Solves the sub-problems on each cluster separately and adds the results.
// Every support point must be one of the cluster points; clusters need
// diameter <= C and pairwise distance > 2^(1/p) C.
BarycenterSolution clusterDecompose(const BarycenterProblem& problem, const std::vector<std::vector<Point>>& clusters,
                                    ClusterSolver solver = ClusterSolver::MultiMarginal,
                                    const MultiScaleConfig& cfg = {}, std::size_t jobs = 1);

// Support points of all inputs grouped by the box containing them; points in no box are an error.
std::vector<std::vector<Point>> clustersFromBoxes(const BarycenterProblem& problem,
                                                  const std::vector<std::pair<Point, Point>>& boxes);

}  // namespace krbary
