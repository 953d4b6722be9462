#include "krbary/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "krbary/error.hpp"

namespace krbary {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Primal network simplex on the bipartite graph sources -> sinks, started from
// an artificial root joined to every node. Leaving arcs follow Cunningham's
// rule, so the tree stays strongly feasible and degenerate pivots cannot cycle.
// Entering arcs come from a block search over the arcs in index order.
class NetworkSimplex {
public:
    NetworkSimplex(std::span<const double> a, std::span<const double> b, const DenseMatrix& c)
        : n_(a.size()), m_(b.size()), root_(a.size() + b.size()), c_(c) {
        std::size_t nodes = n_ + m_ + 1;
        parent_.assign(nodes, kNone);
        parentArc_.assign(nodes, kNone);
        up_.assign(nodes, 0);
        flow_.assign(nodes, 0.0);
        pot_.assign(nodes, 0.0);
        firstChild_.assign(nodes, kNone);
        nextSib_.assign(nodes, kNone);
        prevSib_.assign(nodes, kNone);
        stamp_.assign(nodes, 0);
        artOut_.assign(n_ + m_, 0);

        double maxc = 0.0;
        for (double v : c.data)
            if (std::isfinite(v)) maxc = std::max(maxc, std::abs(v));
        scale_ = maxc > 0 ? maxc : 1.0;
        artCost_ = (scale_ + 1.0) * double(nodes);
        eps_ = 1e-11 * scale_;

        for (std::size_t v = 0; v < n_ + m_; ++v) {
            bool source = v < n_;
            double supply = source ? a[v] : b[v - n_];
            artOut_[v] = source && supply > 0;
            parent_[v] = root_;
            parentArc_[v] = n_ * m_ + v;
            up_[v] = artOut_[v];
            flow_[v] = supply;
            pot_[v] = artOut_[v] ? artCost_ : -artCost_;
            attach(root_, v);
        }
        std::size_t arcs = n_ * m_;
        block_ = std::max<std::size_t>(10, std::size_t(std::ceil(std::sqrt(double(arcs)))));
    }

    void run() {
        std::size_t limit = 1000000 + 200 * (n_ * m_ + n_ + m_);
        for (int pass = 0; pass < 3; ++pass) {
            for (;;) {
                std::size_t k = findEntering();
                if (k == kNone) break;
                pivot(k);
                if (++iterations_ > limit) throw SolverError("network simplex iteration limit");
            }
            // Rebuild potentials exactly from the tree and confirm optimality.
            recomputePotentials();
            if (findEntering() == kNone) return;
        }
    }

    std::size_t tail(std::size_t k) const {
        if (k < n_ * m_) return k / m_;
        std::size_t v = k - n_ * m_;
        return artOut_[v] ? v : root_;
    }
    std::size_t head(std::size_t k) const {
        if (k < n_ * m_) return n_ + k % m_;
        std::size_t v = k - n_ * m_;
        return artOut_[v] ? root_ : v;
    }
    double cost(std::size_t k) const { return k < n_ * m_ ? c_.data[k] : artCost_; }

    TransportPlan extract(std::span<const double> a, std::span<const double> b) const {
        double total = 0.0;
        for (double v : a) total += v;
        std::vector<std::vector<PlanEntry>> rows(n_);
        for (std::size_t v = 0; v < n_ + m_; ++v) {
            std::size_t k = parentArc_[v];
            double f = flow_[v];
            if (k >= n_ * m_) {
                if (f > 1e-9 * std::max(1.0, total)) throw SolverError("no feasible plan on admissible arcs");
                continue;
            }
            if (f != 0.0) rows[k / m_].push_back({k / m_, k % m_, f});
        }
        TransportPlan plan;
        plan.rowMarginals.assign(n_, 0.0);
        plan.colMarginals.assign(m_, 0.0);
        for (auto& row : rows) {
            if (row.empty()) continue;
            std::sort(row.begin(), row.end(), [](const PlanEntry& x, const PlanEntry& y) { return x.j < y.j; });
            // Round dust to zero and hand it to the largest entry of the row.
            double dust = 0.0;
            std::size_t big = 0;
            for (std::size_t t = 0; t < row.size(); ++t)
                if (row[t].mass > row[big].mass) big = t;
            for (auto& e : row)
                if (e.mass < 1e-12 && &e != &row[big]) {
                    dust += e.mass;
                    e.mass = 0.0;
                }
            row[big].mass += dust;
            for (const auto& e : row)
                if (e.mass > 0) plan.entries.push_back(e);
        }
        DualCertificate dual;
        dual.f.resize(n_);
        dual.g.resize(m_);
        for (std::size_t i = 0; i < n_; ++i) dual.f[i] = pot_[i];
        for (std::size_t j = 0; j < m_; ++j) dual.g[j] = -pot_[n_ + j];
        double dualObj = 0.0;
        for (std::size_t i = 0; i < n_; ++i) dualObj += a[i] * dual.f[i];
        for (std::size_t j = 0; j < m_; ++j) dualObj += b[j] * dual.g[j];
        for (const auto& e : plan.entries) {
            plan.objective += c_(e.i, e.j) * e.mass;
            plan.rowMarginals[e.i] += e.mass;
            plan.colMarginals[e.j] += e.mass;
        }
        dual.gap = std::abs(plan.objective - dualObj);
        plan.duals = std::move(dual);
        return plan;
    }

    std::size_t iterations() const { return iterations_; }

private:
    void attach(std::size_t p, std::size_t v) {
        prevSib_[v] = kNone;
        nextSib_[v] = firstChild_[p];
        if (firstChild_[p] != kNone) prevSib_[firstChild_[p]] = v;
        firstChild_[p] = v;
    }
    void detach(std::size_t p, std::size_t v) {
        if (prevSib_[v] != kNone) nextSib_[prevSib_[v]] = nextSib_[v];
        else firstChild_[p] = nextSib_[v];
        if (nextSib_[v] != kNone) prevSib_[nextSib_[v]] = prevSib_[v];
        prevSib_[v] = nextSib_[v] = kNone;
    }

    std::size_t findEntering() {
        std::size_t arcs = n_ * m_;
        if (arcs == 0) return kNone;
        std::size_t best = kNone;
        double bestRc = -eps_;
        std::size_t scanned = 0, inBlock = 0;
        std::size_t k = nextArc_;
        while (scanned < arcs) {
            double ck = c_.data[k];
            if (ck < kInf) {
                double rc = ck - pot_[k / m_] + pot_[n_ + k % m_];
                if (rc < bestRc) {
                    bestRc = rc;
                    best = k;
                }
            }
            ++scanned;
            if (++k == arcs) k = 0;
            if (++inBlock == block_) {
                if (best != kNone) break;
                inBlock = 0;
            }
        }
        nextArc_ = k;
        return best;
    }

    void pivot(std::size_t k) {
        std::size_t t = tail(k), h = head(k);
        double rc = cost(k) - pot_[t] + pot_[h];

        ++stampGen_;
        for (std::size_t u = t; u != kNone; u = parent_[u]) stamp_[u] = stampGen_;
        std::size_t w = h;
        while (stamp_[w] != stampGen_) w = parent_[w];

        double delta = kInf;
        std::size_t out = kNone;
        bool onTail = false;
        for (std::size_t u = t; u != w; u = parent_[u])
            if (up_[u] && flow_[u] < delta) {
                delta = flow_[u];
                out = u;
                onTail = true;
            }
        for (std::size_t u = h; u != w; u = parent_[u])
            if (!up_[u] && flow_[u] <= delta) {
                delta = flow_[u];
                out = u;
                onTail = false;
            }
        if (out == kNone) throw SolverError("unbounded transport problem");

        if (delta > 0) {
            for (std::size_t u = t; u != w; u = parent_[u]) flow_[u] += up_[u] ? -delta : delta;
            for (std::size_t u = h; u != w; u = parent_[u]) flow_[u] += up_[u] ? delta : -delta;
        }

        // Re-hang the subtree cut off by the leaving arc below the other end of
        // the entering arc, reversing the path from that end up to `out`.
        std::size_t x = onTail ? t : h;
        std::size_t newParent = onTail ? h : t;
        std::size_t newArc = k;
        char newUp = onTail ? 1 : 0;
        double newFlow = delta;
        std::size_t top = x;
        for (;;) {
            std::size_t oldParent = parent_[x], oldArc = parentArc_[x];
            char oldUp = up_[x];
            double oldFlow = flow_[x];
            detach(oldParent, x);
            attach(newParent, x);
            parent_[x] = newParent;
            parentArc_[x] = newArc;
            up_[x] = newUp;
            flow_[x] = newFlow;
            if (x == out) break;
            newParent = x;
            newArc = oldArc;
            newUp = !oldUp;
            newFlow = oldFlow;
            x = oldParent;
        }

        double shift = onTail ? rc : -rc;
        stack_.clear();
        stack_.push_back(top);
        while (!stack_.empty()) {
            std::size_t v = stack_.back();
            stack_.pop_back();
            pot_[v] += shift;
            for (std::size_t ch = firstChild_[v]; ch != kNone; ch = nextSib_[ch]) stack_.push_back(ch);
        }
    }

    void recomputePotentials() {
        pot_[root_] = 0.0;
        stack_.clear();
        stack_.push_back(root_);
        while (!stack_.empty()) {
            std::size_t v = stack_.back();
            stack_.pop_back();
            for (std::size_t ch = firstChild_[v]; ch != kNone; ch = nextSib_[ch]) {
                double c = cost(parentArc_[ch]);
                // tree arcs have zero reduced cost: pot[head] = pot[tail] - c
                pot_[ch] = up_[ch] ? pot_[v] + c : pot_[v] - c;
                stack_.push_back(ch);
            }
        }
    }

    std::size_t n_, m_, root_;
    const DenseMatrix& c_;
    double scale_ = 1.0, artCost_ = 1.0, eps_ = 0.0;
    std::vector<std::size_t> parent_, parentArc_;
    std::vector<char> up_, artOut_;
    std::vector<double> flow_, pot_;
    std::vector<std::size_t> firstChild_, nextSib_, prevSib_, stamp_, stack_;
    std::size_t stampGen_ = 0, nextArc_ = 0, block_ = 10, iterations_ = 0;
};

void validateSupplies(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("empty marginal");
    double sa = 0, sb = 0;
    for (double v : a) {
        if (!std::isfinite(v) || v < 0) throw ValidationError("invalid weights");
        sa += v;
    }
    for (double v : b) {
        if (!std::isfinite(v) || v < 0) throw ValidationError("invalid weights");
        sb += v;
    }
    if (std::abs(sa - sb) > 1e-9 * std::max({sa, sb, 1.0})) throw ValidationError("unbalanced input");
}

// Fold the rounding discrepancy between the two totals into the largest supply.
std::vector<double> balanced(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.begin(), a.end());
    double sa = 0, sb = 0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    auto big = std::max_element(out.begin(), out.end());
    *big = std::max(0.0, *big + (sb - sa));
    return out;
}

}  // namespace

double TransportPlan::totalMass() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.mass;
    return s;
}

namespace detail {
TransportPlan networkSimplex(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost) {
    if (cost.rows != a.size() || cost.cols != b.size()) throw ValidationError("cost matrix shape mismatch");
    validateSupplies(a, b);
    std::vector<double> aa = balanced(a, b);
    NetworkSimplex ns(aa, b, cost);
    ns.run();
    return ns.extract(aa, b);
}
}  // namespace detail

TransportPlan solveBalancedOTFromMatrix(std::span<const double> a, std::span<const double> b, const DenseMatrix& cost) {
    for (double v : cost.data)
        if (!std::isfinite(v) || v < 0) throw ValidationError("invalid cost");
    return detail::networkSimplex(a, b, cost);
}

TransportPlan solveBalancedOT(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundCost& cost) {
    if (mu.empty() || nu.empty()) throw ValidationError("empty marginal");
    requireSameDimension(mu, nu);
    return solveBalancedOTFromMatrix(mu.weights(), nu.weights(), costMatrix(mu, nu, cost));
}

void writePlanCsv(std::ostream& os, const TransportPlan& plan) {
    char buf[64];
    os << "i,j,mass\n";
    for (const auto& e : plan.entries) {
        std::snprintf(buf, sizeof buf, "%.17g", e.mass);
        os << e.i << ',' << e.j << ',' << buf << '\n';
    }
}

}  // namespace krbary
