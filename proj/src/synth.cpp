#include "krbary/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "krbary/error.hpp"
#include "krbary/rng.hpp"

namespace krbary::synth {

namespace {

struct Ellipse {
    double cx, cy, a, b, theta;
};

Ellipse drawEllipse(Rng& rng, double lo, double hi, double axisMin, double axisMax) {
    Ellipse e;
    e.a = rng.uniform(axisMin, axisMax);
    e.b = rng.uniform(axisMin, axisMax);
    e.theta = rng.uniform(0.0, std::numbers::pi);
    e.cx = rng.uniform(lo, hi);
    e.cy = rng.uniform(lo, hi);
    return e;
}

void discretize(const Ellipse& e, double scale, std::size_t m, std::vector<Point>& pts) {
    double c = std::cos(e.theta), s = std::sin(e.theta);
    for (std::size_t j = 0; j < m; ++j) {
        double t = 2.0 * std::numbers::pi * double(j) / double(m);
        double u = scale * e.a * std::cos(t), v = scale * e.b * std::sin(t);
        pts.push_back(Point{e.cx + c * u - s * v, e.cy + s * u + c * v});
    }
}

void nested(const Ellipse& e, std::size_t k, std::size_t m, std::vector<Point>& pts) {
    for (std::size_t l = 0; l < k; ++l) discretize(e, double(k - l) / double(k), m, pts);
}

DiscreteMeasure unitMass(std::vector<Point> pts, std::size_t i) {
    std::vector<double> w(pts.size(), 1.0);
    if (pts.empty()) return DiscreteMeasure::empty(2).withId("m" + std::to_string(i));
    return DiscreteMeasure(std::move(pts), std::move(w), "m" + std::to_string(i));
}

}  // namespace

std::vector<DiscreteMeasure> nestedEllipses(const NestedConfig& cfg) {
    if (cfg.pointsPerEllipse < 3) throw ValidationError("need at least 3 points per ellipse");
    if (!(0 < cfg.axisMin && cfg.axisMin <= cfg.axisMax && cfg.axisMax < 0.5))
        throw ValidationError("ellipse axes must satisfy 0 < min <= max < 0.5");
    std::vector<DiscreteMeasure> out;
    for (std::size_t i = 0; i < cfg.count; ++i) {
        Rng rng(cfg.seed, i);
        std::size_t k = cfg.ellipses ? cfg.ellipses : 1 + rng.index(3);
        Ellipse e = drawEllipse(rng, cfg.axisMax, 1.0 - cfg.axisMax, cfg.axisMin, cfg.axisMax);
        std::vector<Point> pts;
        nested(e, k, cfg.pointsPerEllipse, pts);
        out.push_back(unitMass(std::move(pts), i));
    }
    return out;
}

std::vector<DiscreteMeasure> clusteredEllipses(const ClusteredConfig& cfg) {
    if (cfg.pointsPerEllipse < 3) throw ValidationError("need at least 3 points per ellipse");
    if (cfg.centers.size() != cfg.intensities.size()) throw ValidationError("one intensity per cluster center");
    if (!(0 < cfg.axisMin && cfg.axisMin <= cfg.axisMax && cfg.axisMax <= cfg.halfWidth))
        throw ValidationError("ellipse axes must satisfy 0 < min <= max <= cluster half-width");
    for (const Point& c : cfg.centers)
        if (c.dim() != 2) throw ValidationError("cluster centers must be 2-D");
    std::vector<DiscreteMeasure> out;
    double slack = cfg.halfWidth - cfg.axisMax;
    for (std::size_t i = 0; i < cfg.count; ++i) {
        Rng rng(cfg.seed, i);
        std::vector<Point> pts;
        for (std::size_t r = 0; r < cfg.centers.size(); ++r) {
            auto n = static_cast<std::size_t>(rng.poisson(cfg.intensities[r]));
            if (n == 0) continue;
            Ellipse e = drawEllipse(rng, -slack, slack, cfg.axisMin, cfg.axisMax);
            e.cx += cfg.centers[r][0];
            e.cy += cfg.centers[r][1];
            nested(e, n, cfg.pointsPerEllipse, pts);
        }
        out.push_back(unitMass(std::move(pts), i));
    }
    return out;
}

void DistortionParams::validate() const {
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    if (!prob(pDel) || !prob(pAdd)) throw ValidationError("probabilities must lie in [0, 1]");
    if (!(lambdaDel >= 0) || !(lambdaAdd >= 0)) throw ValidationError("Poisson intensities must be non-negative");
    if (!(u0 <= u1) || !(a1 <= b1) || !(a2 <= b2) || !(l <= u))
        throw ValidationError("need u0 <= u1, a1 <= b1, a2 <= b2 and l <= u");
    if (mAdd.dim() != 2) throw ValidationError("addition mean must be 2-D");
    double s00 = sigmaAdd[0][0], s01 = sigmaAdd[0][1], s10 = sigmaAdd[1][0], s11 = sigmaAdd[1][1];
    if (s01 != s10 || s00 < 0 || s11 < 0 || s00 * s11 - s01 * s01 < -1e-15)
        throw ValidationError("addition covariance must be symmetric positive semi-definite");
}

std::vector<DiscreteMeasure> distort(const DiscreteMeasure& mu0, const DistortionParams& prm, std::size_t count) {
    prm.validate();
    if (!mu0.empty() && mu0.dim() != 2) throw ValidationError("distortion works on 2-D measures");
    // Cholesky factor of the addition covariance.
    double l00 = std::sqrt(prm.sigmaAdd[0][0]);
    double l10 = l00 > 0 ? prm.sigmaAdd[1][0] / l00 : 0.0;
    double l11 = std::sqrt(std::max(0.0, prm.sigmaAdd[1][1] - l10 * l10));

    std::vector<DiscreteMeasure> out;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(prm.seed, i);
        std::size_t n = mu0.size();
        std::vector<char> keep(n, 1);
        if (rng.bernoulli(prm.pDel)) {
            auto d = static_cast<std::size_t>(rng.poisson(prm.lambdaDel));
            for (std::size_t k : rng.sampleWithoutReplacement(n, std::min(d, n))) keep[k] = 0;
        }
        std::vector<std::vector<double>> pts;
        std::vector<double> w;
        std::vector<char> original;
        for (std::size_t k = 0; k < n; ++k)
            if (keep[k]) {
                pts.push_back(mu0.point(k).coords());
                w.push_back(mu0.weight(k));
                original.push_back(1);
            }
        if (rng.bernoulli(prm.pAdd)) {
            std::uint64_t a = rng.poisson(prm.lambdaAdd);
            for (std::uint64_t k = 0; k < a; ++k) {
                double z0 = rng.normal(), z1 = rng.normal();
                pts.push_back({prm.mAdd[0] + l00 * z0, prm.mAdd[1] + l10 * z0 + l11 * z1});
                w.push_back(rng.uniform(prm.u0, prm.u1));
                original.push_back(0);
            }
        }
        for (auto& x : pts) {
            x[0] += rng.uniform(prm.a1, prm.b1);
            x[1] += rng.uniform(prm.a2, prm.b2);
        }
        for (std::size_t k = 0; k < w.size(); ++k)
            if (original[k]) w[k] = std::max(1e-9, w[k] + rng.uniform(prm.l, prm.u));
        std::vector<Point> P;
        for (auto& x : pts) P.emplace_back(std::move(x));
        std::string id = "m" + std::to_string(i);
        out.push_back(P.empty() ? DiscreteMeasure::empty(2).withId(id) : DiscreteMeasure(std::move(P), std::move(w), id));
    }
    return out;
}

std::vector<DiscreteMeasure> fourSquares(std::size_t n, double side) {
    if (n == 0) throw ValidationError("grid size must be positive");
    if (!(side > 0 && side <= 0.5)) throw ValidationError("square side must lie in (0, 0.5]");
    const double centers[4][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
    std::vector<DiscreteMeasure> out;
    for (int q = 0; q < 4; ++q) {
        std::vector<Point> pts;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                double x = (c + 0.5) / double(n), y = (r + 0.5) / double(n);
                if (std::abs(x - centers[q][0]) < side / 2 && std::abs(y - centers[q][1]) < side / 2)
                    pts.push_back(Point{x, y});
            }
        out.push_back(unitMass(std::move(pts), std::size_t(q)));
    }
    return out;
}

}  // namespace krbary::synth
