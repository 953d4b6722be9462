#include "krbary/kr_distance.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "krbary/error.hpp"

namespace krbary {

namespace {

void checkParams(double p, double C) {
    if (!(p >= 1) || !std::isfinite(p)) throw ValidationError("exponent p must be >= 1");
    if (!(C > 0) || !std::isfinite(C)) throw ValidationError("C must be positive");
}

double powp(double d, double p) { return p == 1.0 ? d : (p == 2.0 ? d * d : std::pow(d, p)); }

// Lifted cost matrix. With `prune`, pairs farther apart than C get no arc:
// once the padding is at least M(mu)+M(nu) such a pair can always be rerouted
// through the dummy at the same cost C^p.
DenseMatrix liftedCosts(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C,
                        const GroundCost& metric, bool prune) {
    std::size_t n = mu.size(), m = nu.size();
    double cp = powp(C, p);
    DenseMatrix c(n + 1, m + 1, 0.5 * cp);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double d = metric.distance(mu.point(i), nu.point(j));
            c(i, j) = d <= C ? powp(d, p) : (prune ? std::numeric_limits<double>::infinity() : cp);
        }
    c(n, m) = 0.0;
    return c;
}

TransportPlan solveLifted(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C,
                          const GroundCost& metric, double padding) {
    std::vector<double> a = mu.weights(), b = nu.weights();
    a.push_back(padding - mu.totalMass());
    b.push_back(padding - nu.totalMass());
    bool prune = padding >= mu.totalMass() + nu.totalMass();
    return detail::networkSimplex(a, b, liftedCosts(mu, nu, p, C, metric, prune));
}

}  // namespace

UotResult uot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C) {
    return uot(mu, nu, p, C, GroundCost::euclideanPower(1));
}

UotResult uot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C, const GroundCost& metric) {
    checkParams(p, C);
    requireSameDimension(mu, nu);
    UotResult r;
    r.p = p;
    r.C = C;
    r.mu = mu;
    r.nu = nu;
    r.metric = metric;
    std::size_t n = mu.size(), m = nu.size();
    r.plan.rowMarginals.assign(n, 0.0);
    r.plan.colMarginals.assign(m, 0.0);
    r.duals.f.assign(n, 0.0);
    r.duals.g.assign(m, 0.0);
    double mass = mu.totalMass() + nu.totalMass();
    if (mass == 0.0) return r;

    // Twice the minimal padding keeps the dummy-dummy arc strictly positive,
    // so it is basic and the dummy potentials sum to zero.
    TransportPlan lifted = solveLifted(mu, nu, p, C, metric, 2.0 * mass);
    r.value = lifted.objective;
    r.krDistance = std::pow(r.value, 1.0 / p);
    for (const auto& e : lifted.entries) {
        if (e.i == n || e.j == m) continue;
        r.plan.entries.push_back(e);
        r.plan.rowMarginals[e.i] += e.mass;
        r.plan.colMarginals[e.j] += e.mass;
        r.plan.objective += powp(metric.distance(mu.point(e.i), nu.point(e.j)), p) * e.mass;
    }
    double moved = r.plan.totalMass();
    r.destroyedMass = mu.totalMass() - moved;
    r.createdMass = nu.totalMass() - moved;

    const auto& F = lifted.duals->f;
    const auto& G = lifted.duals->g;
    double shift = F[n];
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += mu.weight(i) * (r.duals.f[i] = F[i] - shift);
    for (std::size_t j = 0; j < m; ++j) dual += nu.weight(j) * (r.duals.g[j] = G[j] + shift);
    r.duals.gap = std::abs(r.value - dual);
    return r;
}

double krDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C) {
    return uot(mu, nu, p, C).krDistance;
}

DualCertificate dualPotentials(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C) {
    return uot(mu, nu, p, C).duals;
}

double liftedValue(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double C, double padding) {
    checkParams(p, C);
    requireSameDimension(mu, nu);
    double need = std::max(mu.totalMass(), nu.totalMass());
    if (padding < need * (1 - 1e-12)) throw ValidationError("insufficient padding mass");
    if (padding == 0.0) return 0.0;
    padding = std::max(padding, need);
    return solveLifted(mu, nu, p, C, GroundCost::euclideanPower(1), padding).objective;
}

TransportGraph transportGraph(const UotResult& result) {
    TransportGraph g;
    std::map<Point, std::size_t> id;
    auto node = [&](const Point& x) {
        auto [it, fresh] = id.emplace(x, g.nodes.size());
        if (fresh) g.nodes.push_back(x);
        return it->second;
    };
    for (const auto& e : result.plan.entries) {
        if (e.mass <= 1e-12) continue;
        const Point& x = result.mu.point(e.i);
        const Point& y = result.nu.point(e.j);
        g.edges.push_back({node(x), node(y), e.mass, powp(result.metric.distance(x, y), result.p)});
    }
    return g;
}

double TransportGraph::maxPathLength() const {
    std::vector<std::vector<std::size_t>> out(nodes.size());
    for (std::size_t k = 0; k < edges.size(); ++k)
        if (edges[k].from != edges[k].to) out[edges[k].from].push_back(k);
    // 0 = unvisited, 1 = on stack, 2 = done
    std::vector<char> state(nodes.size(), 0);
    std::vector<double> best(nodes.size(), 0.0);
    std::function<double(std::size_t)> longest = [&](std::size_t v) -> double {
        if (state[v] == 2) return best[v];
        if (state[v] == 1) throw SolverError("transport graph has a cycle");
        state[v] = 1;
        double b = 0.0;
        for (std::size_t k : out[v]) b = std::max(b, edges[k].length + longest(edges[k].to));
        state[v] = 2;
        return best[v] = b;
    };
    double mx = 0.0;
    for (std::size_t v = 0; v < nodes.size(); ++v) mx = std::max(mx, longest(v));
    return mx;
}

}  // namespace krbary
