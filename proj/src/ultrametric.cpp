#include "krbary/ultrametric.hpp"

#include <cmath>
#include <string>

#include "krbary/error.hpp"

namespace krbary {

namespace {

void fail(const std::string& what) { throw ValidationError("invalid tree: " + what); }

}  // namespace

UltrametricTree::UltrametricTree(std::vector<std::size_t> parent, std::vector<double> height,
                                 std::vector<std::size_t> leaves)
    : parent_(std::move(parent)), height_(std::move(height)), leaves_(std::move(leaves)) {
    std::size_t n = parent_.size();
    if (n == 0) fail("no nodes");
    if (height_.size() != n) fail("parent and height lengths differ");
    children_.resize(n);
    std::size_t roots = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (parent_[v] >= n) fail("parent index out of range");
        if (!std::isfinite(height_[v]) || height_[v] < 0) fail("heights must be finite and non-negative");
        if (parent_[v] == v) {
            root_ = v;
            ++roots;
        } else {
            children_[parent_[v]].push_back(v);
        }
    }
    if (roots != 1) fail("exactly one root required");

    order_.reserve(n);
    order_.push_back(root_);
    for (std::size_t k = 0; k < order_.size(); ++k)
        for (std::size_t c : children_[order_[k]]) order_.push_back(c);
    if (order_.size() != n) fail("not connected");

    for (std::size_t v = 0; v < n; ++v)
        if (height_[parent_[v]] < height_[v]) fail("height must not increase towards the leaves");

    std::vector<char> listed(n, 0);
    for (std::size_t l : leaves_) {
        if (l >= n) fail("leaf index out of range");
        if (listed[l]) fail("duplicate leaf");
        listed[l] = 1;
    }
    for (std::size_t v = 0; v < n; ++v) {
        bool childless = children_[v].empty();
        if (childless != bool(listed[v])) fail("leaves must be exactly the childless nodes");
        if (childless && height_[v] != 0.0) fail("leaf height must be 0");
    }
}

std::size_t lowestCommonAncestor(const UltrametricTree& t, std::size_t v, std::size_t w) {
    if (v >= t.size() || w >= t.size()) throw ValidationError("unknown node id");
    std::vector<char> seen(t.size(), 0);
    for (std::size_t u = v;; u = t.parent(u)) {
        seen[u] = 1;
        if (u == t.root()) break;
    }
    std::size_t u = w;
    while (!seen[u]) u = t.parent(u);
    return u;
}

double treeDistance(const UltrametricTree& t, std::size_t v, std::size_t w) {
    std::size_t a = lowestCommonAncestor(t, v, w);
    return (t.height(a) - t.height(v)) + (t.height(a) - t.height(w));
}

UltrametricTree pHeightTransform(const UltrametricTree& t, double p) {
    if (!(p >= 1)) throw ValidationError("exponent p must be >= 1");
    std::vector<double> h = t.heights();
    double s = std::pow(2.0, p - 1);
    for (double& x : h) x = s * std::pow(x, p);
    return UltrametricTree(t.parents(), std::move(h), t.leaves());
}

SubtreeDecomposition subtreeRoots(const UltrametricTree& t, double C) {
    if (!(C > 0)) throw ValidationError("C must be positive");
    SubtreeDecomposition d;
    double half = C / 2;
    for (std::size_t v : t.topDown()) {
        bool in = v == t.root() ? t.height(v) <= half : t.height(v) <= half && half < t.height(t.parent(v));
        if (in) d.roots.push_back(v);
    }
    for (std::size_t r : d.roots) {
        std::vector<std::size_t> m{r};
        for (std::size_t k = 0; k < m.size(); ++k)
            for (std::size_t c : t.children(m[k])) m.push_back(c);
        d.members.push_back(std::move(m));
    }
    return d;
}

double krOnTree(const UltrametricTree& t, const std::vector<double>& mu, const std::vector<double>& nu, double p,
                double C) {
    if (!(p >= 1)) throw ValidationError("exponent p must be >= 1");
    if (!(C > 0)) throw ValidationError("C must be positive");
    std::size_t n = t.size();
    if (mu.size() != n || nu.size() != n) throw ValidationError("measure length must equal the node count");
    for (std::size_t v = 0; v < n; ++v) {
        if (!(mu[v] >= 0) || !(nu[v] >= 0) || !std::isfinite(mu[v]) || !std::isfinite(nu[v]))
            throw ValidationError("invalid weights");
        if (!t.isLeaf(v) && (mu[v] != 0 || nu[v] != 0)) throw ValidationError("interior mass unsupported");
    }
    // Subtree masses by reverse top-down accumulation.
    std::vector<double> a = mu, b = nu;
    const auto& order = t.topDown();
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (*it != t.root()) {
            a[t.parent(*it)] += a[*it];
            b[t.parent(*it)] += b[*it];
        }

    double cp = std::pow(C, p), s = std::pow(2.0, p - 1);
    std::vector<char> inR(n, 0), below(n, 0);
    for (std::size_t r : subtreeRoots(t, C).roots) inR[r] = 1;
    double total = 0.0;
    for (std::size_t v : order) {
        double hv = std::pow(t.height(v), p);
        if (below[v]) {
            total += s * (std::pow(t.height(t.parent(v)), p) - hv) * std::abs(a[v] - b[v]);
        } else if (inR[v]) {
            double coef = cp / 2 - s * hv;
            if (coef < -1e-12 * cp) throw GuardError("C-regime unsupported for p>1");
            total += std::max(coef, 0.0) * std::abs(a[v] - b[v]);
        }
        for (std::size_t c : t.children(v)) below[c] = below[v] || inR[v];
    }
    return total;
}

DenseMatrix nodeDistanceMatrix(const UltrametricTree& t) {
    std::size_t n = t.size();
    DenseMatrix d(n, n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w = v + 1; w < n; ++w) d(v, w) = d(w, v) = treeDistance(t, v, w);
    return d;
}

DiscreteMeasure nodeMeasure(const std::vector<double>& weights) {
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t v = 0; v < weights.size(); ++v) {
        pts.push_back(Point{double(v)});
        w.push_back(weights[v]);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace krbary
