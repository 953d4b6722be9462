#include "krbary/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "krbary/error.hpp"

namespace krbary {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logSumExp(const double* v, std::size_t n) {
    double mx = -kInf;
    for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k]);
    if (mx == -kInf) return -kInf;
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k] - mx);
    return mx + std::log(s);
}

// Exponent of a Gibbs kernel entry; missing arcs contribute nothing.
double gibbs(double potential, double cost, double eps) { return cost == kInf ? -kInf : (potential - cost) / eps; }

// Change between two potentials; equal infinities count as no change.
double delta(double a, double b) { return a == b ? 0.0 : std::abs(a - b); }

double diameter(const std::vector<const std::vector<Point>*>& sets) {
    std::vector<Point> all;
    for (auto* s : sets) all.insert(all.end(), s->begin(), s->end());
    double d = 0;
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j) d = std::max(d, distance(all[i], all[j]));
    return d;
}

double pickEpsilon(const ScalingConfig& cfg, double diam) {
    if (cfg.epsilon > 0) return cfg.epsilon;
    if (cfg.epsilon < 0 || std::isnan(cfg.epsilon)) throw ValidationError("epsilon must be positive");
    return diam > 0 ? 1e-3 * diam * diam : 1e-3;
}

void checkConfig(const ScalingConfig& cfg) {
    if (!(cfg.tol > 0)) throw ValidationError("tol must be positive");
    if (cfg.maxIter == 0) throw ValidationError("maxIter must be positive");
}

std::vector<double> costMatrix(const std::vector<Point>& X, const std::vector<Point>& Y, const DivergenceSpec& spec) {
    std::vector<double> c(X.size() * Y.size());
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t j = 0; j < Y.size(); ++j) c[i * Y.size() + j] = spec.cost(distance(X[i], Y[j]));
    return c;
}

}  // namespace

double klDivergence(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("length mismatch");
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!(a[k] >= 0) || !(b[k] >= 0)) throw ValidationError("invalid weights");
        if (a[k] == 0) {
            s += b[k];
        } else if (b[k] == 0) {
            return kInf;
        } else {
            s += a[k] * std::log(a[k] / b[k]) - a[k] + b[k];
        }
    }
    return s;
}

double DivergenceSpec::marginalWeight() const { return model == DivergenceModel::GHK ? param : 1.0; }

double DivergenceSpec::cost(double d) const {
    if (model == DivergenceModel::GHK) return d * d;
    if (d >= param) return kInf;
    double c = std::cos(d);
    return c > 0 ? -std::log(c * c) : kInf;
}

void DivergenceSpec::validate() const {
    if (model == DivergenceModel::GHK && !(param > 0 && std::isfinite(param)))
        throw ValidationError("lambda must be positive");
    if (model == DivergenceModel::HK && !(param > 0 && param <= std::numbers::pi / 2))
        throw ValidationError("sigma must lie in (0, pi/2]");
}

ScalingResult unbalancedScaling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DivergenceSpec& spec,
                                const ScalingConfig& cfg) {
    spec.validate();
    checkConfig(cfg);
    requireSameDimension(mu, nu);
    const std::size_t n = mu.size(), m = nu.size();
    const double lam = spec.marginalWeight();
    ScalingResult res;
    res.epsilon = pickEpsilon(cfg, diameter({&mu.points(), &nu.points()}));
    const double eps = res.epsilon, theta = lam / (lam + eps);
    std::vector<double> c = costMatrix(mu.points(), nu.points(), spec);
    std::vector<double> loga(n), logb(m);
    for (std::size_t i = 0; i < n; ++i) loga[i] = std::log(mu.weight(i));
    for (std::size_t j = 0; j < m; ++j) logb[j] = std::log(nu.weight(j));

    res.f.assign(n, 0.0);
    res.g.assign(m, 0.0);
    std::vector<double> buf(std::max(n, m));
    for (res.iterations = 1; res.iterations <= cfg.maxIter; ++res.iterations) {
        double change = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) buf[j] = gibbs(res.g[j], c[i * m + j], eps);
            double v = theta * eps * (loga[i] - logSumExp(buf.data(), m));
            change = std::max(change, delta(v, res.f[i]));
            res.f[i] = v;
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) buf[i] = gibbs(res.f[i], c[i * m + j], eps);
            double v = theta * eps * (logb[j] - logSumExp(buf.data(), n));
            change = std::max(change, delta(v, res.g[j]));
            res.g[j] = v;
        }
        // Best dual shift (f + t, g - t); the entropic term is unchanged by it, and
        // it removes the slow total-mass mode when lambda >> eps.
        double A = 0, B = 0;
        for (std::size_t i = 0; i < n; ++i) A += mu.weight(i) * std::exp(-res.f[i] / lam);
        for (std::size_t j = 0; j < m; ++j) B += nu.weight(j) * std::exp(-res.g[j] / lam);
        if (A > 0 && B > 0 && std::isfinite(A) && std::isfinite(B)) {
            double t = lam / 2 * std::log(A / B);
            for (double& v : res.f) v += t;
            for (double& v : res.g) v -= t;
            change = std::max(change, std::abs(t));
        }
        if (change < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(res.iterations, cfg.maxIter);

    res.rowMarginal.assign(n, 0.0);
    res.colMarginal.assign(m, 0.0);
    double transport = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double cij = c[i * m + j];
            if (cij == kInf || res.f[i] == kInf || res.g[j] == kInf) continue;
            double pij = std::exp((res.f[i] + res.g[j] - cij) / eps);
            res.rowMarginal[i] += pij;
            res.colMarginal[j] += pij;
            transport += cij * pij;
        }
    res.value = transport + lam * klDivergence(res.rowMarginal, mu.weights()) +
                lam * klDivergence(res.colMarginal, nu.weights());
    return res;
}

ScalingResult ghkDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                          const ScalingConfig& cfg) {
    return unbalancedScaling(mu, nu, {DivergenceModel::GHK, lambda}, cfg);
}

ScalingResult hkDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double sigma, const ScalingConfig& cfg) {
    return unbalancedScaling(mu, nu, {DivergenceModel::HK, sigma}, cfg);
}

ScalingBarycenter scalingBarycenter(const std::vector<DiscreteMeasure>& measures, const DivergenceSpec& spec,
                                    const ScalingConfig& cfg) {
    spec.validate();
    checkConfig(cfg);
    if (measures.empty()) throw ValidationError("at least one measure required");
    if (cfg.gridSupport.empty()) throw ValidationError("barycenter grid support is empty");
    std::size_t dim = commonDimension(measures);
    for (const Point& y : cfg.gridSupport)
        if (dim != 0 && y.dim() != dim) throw ValidationError("dimension mismatch");

    const std::vector<Point>& Y = cfg.gridSupport;
    const std::size_t n = Y.size(), J = measures.size();
    const double lam = spec.marginalWeight();
    std::vector<const std::vector<Point>*> sets{&Y};
    for (const auto& mu : measures) sets.push_back(&mu.points());
    ScalingBarycenter out;
    out.epsilon = pickEpsilon(cfg, diameter(sets));
    const double eps = out.epsilon, theta = lam / (lam + eps), w = 1.0 / double(J);

    std::vector<std::vector<double>> c(J), f(J), g(J), logs(J), logb(J);
    for (std::size_t i = 0; i < J; ++i) {
        c[i] = costMatrix(Y, measures[i].points(), spec);
        f[i].assign(n, 0.0);
        g[i].assign(measures[i].size(), 0.0);
        logs[i].assign(n, 0.0);
        for (double b : measures[i].weights()) logb[i].push_back(std::log(b));
    }
    std::vector<double> logmu(n, 0.0), buf, terms(J);
    for (out.iterations = 1; out.iterations <= cfg.maxIter; ++out.iterations) {
        double change = 0;
        // Barycenter side: log s_i = LSE_k (g_ik - c_yk) / eps.
        for (std::size_t i = 0; i < J; ++i) {
            std::size_t m = measures[i].size();
            buf.resize(m);
            for (std::size_t y = 0; y < n; ++y) {
                for (std::size_t k = 0; k < m; ++k) buf[k] = gibbs(g[i][k], c[i][y * m + k], eps);
                logs[i][y] = logSumExp(buf.data(), m);
            }
        }
        // Power mean of the s_i with exponent 1 - theta.
        for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t i = 0; i < J; ++i) terms[i] = (1 - theta) * logs[i][y] + std::log(w);
            logmu[y] = logSumExp(terms.data(), J) / (1 - theta);
        }
        for (std::size_t i = 0; i < J; ++i)
            for (std::size_t y = 0; y < n; ++y) {
                double v = logmu[y] == -kInf ? -kInf : theta * eps * (logmu[y] - logs[i][y]);
                change = std::max(change, delta(v, f[i][y]));
                f[i][y] = v;
            }
        // Input side.
        for (std::size_t i = 0; i < J; ++i) {
            std::size_t m = measures[i].size();
            buf.resize(n);
            for (std::size_t k = 0; k < m; ++k) {
                for (std::size_t y = 0; y < n; ++y) buf[y] = gibbs(f[i][y], c[i][y * m + k], eps);
                double v = theta * eps * (logb[i][k] - logSumExp(buf.data(), n));
                change = std::max(change, delta(v, g[i][k]));
                g[i][k] = v;
            }
        }
        if (change < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, cfg.maxIter);
    std::vector<double> weights(n);
    for (std::size_t y = 0; y < n; ++y) weights[y] = std::exp(logmu[y]);
    out.barycenter = DiscreteMeasure(Y, weights);
    if (out.barycenter.empty() && dim) out.barycenter = DiscreteMeasure::empty(dim);
    return out;
}

}  // namespace krbary
