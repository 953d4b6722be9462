#pragma once

#include <cstddef>
#include <vector>

#include "krbary/cost.hpp"
#include "krbary/measure.hpp"
#include "krbary/transport.hpp"

namespace krbary {

struct UotResult {
    double value = 0.0;       // UOT_{p,C}
    double krDistance = 0.0;  // value^(1/p)
    // Sub-coupling on supp(mu) x supp(nu); dummy rows and columns stripped.
    TransportPlan plan;
    double createdMass = 0.0, destroyedMass = 0.0;
    // Potentials of the unbalanced dual, dummy potential shifted to 0.
    DualCertificate duals;
    double p = 1.0, C = 1.0;
    DiscreteMeasure mu, nu;
    GroundCost metric = GroundCost::euclideanPower(1);
};

// Solves UOT_{p,C} exactly through the dummy-point lift. `metric` supplies
// d(x, x'); its exponent is ignored. Euclidean by default.
UotResult uot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C);
UotResult uot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C, const GroundCost& metric);

double krDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C);
DualCertificate dualPotentials(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C);

// Optimal value of the lifted balanced problem with both measures padded to
// total mass `padding`, which must be at least max(M(mu), M(nu)).
double liftedValue(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C, double padding);

struct TransportGraph {
    struct Edge {
        std::size_t from, to;
        double mass, length;  // length = d^p(x, x')
    };
    std::vector<Point> nodes;  // distinct locations of both supports
    std::vector<Edge> edges;

    // Longest directed path, summing edge lengths. Paths continue through
    // locations that receive and send mass.
    double maxPathLength() const;
};

TransportGraph transportGraph(const UotResult& result);

}  // namespace krbary
