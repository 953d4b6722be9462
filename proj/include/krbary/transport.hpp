#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "krbary/cost.hpp"
#include "krbary/measure.hpp"

namespace krbary {

struct PlanEntry {
    std::size_t i = 0, j = 0;
    double mass = 0.0;
};

struct DualCertificate {
    std::vector<double> f, g;
    double gap = 0.0;
};

// Sparse coupling; entries sorted by (i, j), all masses positive.
struct TransportPlan {
    std::vector<PlanEntry> entries;
    std::vector<double> rowMarginals, colMarginals;
    double objective = 0.0;
    std::optional<DualCertificate> duals;

    double totalMass() const;
};

// Exact balanced OT by network simplex. Returns a basic optimal plan together
// with dual potentials f_i + g_j <= c_ij.
TransportPlan solveBalancedOT(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundCost& cost);
TransportPlan solveBalancedOTFromMatrix(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost);

void writePlanCsv(std::ostream& os, const TransportPlan& plan);

namespace detail {
// Same as above but +inf entries of the cost are treated as missing arcs.
// Throws SolverError if no feasible plan uses only finite arcs.
TransportPlan networkSimplex(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost);
}  // namespace detail

}  // namespace krbary
