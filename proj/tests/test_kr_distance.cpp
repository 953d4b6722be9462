#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "krbary/error.hpp"
#include "krbary/kr_distance.hpp"
#include "krbary/transport.hpp"
#include "oracles.hpp"

using namespace krbary;

namespace {

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws) {
    std::vector<Point> pts;
    for (double x : xs) pts.push_back(Point{x});
    return DiscreteMeasure(pts, ws);
}

DiscreteMeasure randomMeasure(std::mt19937_64& rng, std::size_t maxAtoms, bool lattice = false) {
    std::uniform_int_distribution<std::size_t> n(1, maxAtoms);
    std::uniform_real_distribution<double> u(0, 1), w(0.1, 2.0);
    std::uniform_int_distribution<int> site(0, 3);
    std::vector<Point> pts;
    std::vector<double> ws;
    for (std::size_t k = n(rng); k > 0; --k) {
        if (lattice)
            pts.push_back(Point{site(rng) / 3.0, site(rng) / 3.0});
        else
            pts.push_back(Point{u(rng), u(rng)});
        ws.push_back(w(rng));
    }
    return DiscreteMeasure(pts, ws);
}

oracle::Matrix distances(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    oracle::Matrix d(a.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) d[i][j] = distance(a.point(i), b.point(j));
    return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE_BEGIN("kr-distance");

TEST_CASE("uot examples") {
    auto r = uot(line({0}, {1}), line({1}, {1}), 1, 0.5);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK(r.plan.entries.empty());
    CHECK(r.destroyedMass == doctest::Approx(1.0));
    CHECK(r.createdMass == doctest::Approx(1.0));

    auto w = uot(line({0}, {1}), line({1}, {1}), 2, 2);
    CHECK(w.value == doctest::Approx(1.0));
    CHECK(w.value == doctest::Approx(solveBalancedOT(line({0}, {1}), line({1}, {1}), GroundCost::euclideanPower(2)).objective));

    auto mu = DiscreteMeasure({{0, 0}, {1, 1}, {2, 0}}, {1, 2, 3});
    CHECK(uot(mu, mu, 2, 1).value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_WITH_AS(uot(line({0}, {1}), mu, 1, 1), "dimension mismatch", ValidationError);
}

TEST_CASE("kr distance examples") {
    CHECK(krDistance(line({0}, {2}), line({0}, {1}), 2, 1) == doctest::Approx(std::sqrt(0.5)));
    auto mu = line({0, 3}, {1, 2});
    CHECK(krDistance(mu, mu, 1, 1) == 0.0);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        auto a = randomMeasure(rng, 6), b = randomMeasure(rng, 6);
        CHECK(krDistance(a, b, 2, 0.7) == doctest::Approx(krDistance(b, a, 2, 0.7)).epsilon(1e-12));
    }
}

TEST_CASE("matches the slack-variable LP") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 60; ++t) {
        auto a = randomMeasure(rng, 3), b = randomMeasure(rng, 3);
        double p = t % 2 ? 2.0 : 1.0;
        double C = std::vector<double>{0.2, 0.5, 1.0, 3.0}[t % 4];
        auto r = uot(a, b, p, C);
        double want = oracle::bruteForceUot(a.weights(), b.weights(), distances(a, b), p, C);
        CHECK(rel(r.value, want) < 1e-9);
    }
}

TEST_CASE("result invariants") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 100; ++t) {
        auto a = randomMeasure(rng, 8), b = randomMeasure(rng, 8);
        double p = t % 2 ? 2.0 : 1.0, C = 0.1 + 0.05 * (t % 20);
        auto r = uot(a, b, p, C);
        double cp = std::pow(C, p);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(r.plan.rowMarginals[i] <= a.weight(i) + 1e-9);
        for (std::size_t j = 0; j < b.size(); ++j) CHECK(r.plan.colMarginals[j] <= b.weight(j) + 1e-9);
        double formula = r.plan.objective + cp * ((a.totalMass() + b.totalMass()) / 2 - r.plan.totalMass());
        CHECK(rel(r.value, formula) < 1e-8);
        CHECK(r.destroyedMass >= -1e-9);
        CHECK(r.createdMass >= -1e-9);
        CHECK(r.krDistance == doctest::Approx(std::pow(r.value, 1 / p)));
    }
}

TEST_CASE("dual potentials") {
    auto same = dualPotentials(line({0}, {1}), line({0}, {1}), 2, 1);
    CHECK(same.f[0] + same.g[0] <= 1e-12);
    CHECK(same.gap < 1e-12);

    auto d = dualPotentials(line({0}, {1}), line({1}, {1}), 1, 0.5);
    CHECK(d.f[0] == doctest::Approx(0.25));
    CHECK(d.g[0] == doctest::Approx(0.25));

    std::mt19937_64 rng(29);
    for (int t = 0; t < 100; ++t) {
        auto a = randomMeasure(rng, 7), b = randomMeasure(rng, 7);
        double p = t % 2 ? 2.0 : 1.0, C = 0.2 + 0.1 * (t % 10), cp = std::pow(C, p);
        auto r = uot(a, b, p, C);
        double dual = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(r.duals.f[i] <= cp / 2 + 1e-9);
            dual += r.duals.f[i] * a.weight(i);
        }
        for (std::size_t j = 0; j < b.size(); ++j) {
            CHECK(r.duals.g[j] <= cp / 2 + 1e-9);
            dual += r.duals.g[j] * b.weight(j);
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                CHECK(r.duals.f[i] + r.duals.g[j] <= std::pow(distance(a.point(i), b.point(j)), p) + 1e-9);
        CHECK(rel(dual, r.value) < 1e-8);
    }
}

TEST_CASE("metric axioms") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 100; ++t) {
        auto a = randomMeasure(rng, 6, true), b = randomMeasure(rng, 6, true), c = randomMeasure(rng, 6, true);
        double p = t % 2 ? 2.0 : 1.0, C = std::vector<double>{0.3, 1, 3}[t % 3];
        double ab = krDistance(a, b, p, C), bc = krDistance(b, c, p, C), ac = krDistance(a, c, p, C);
        CHECK(ab >= 0);
        CHECK(krDistance(a, a, p, C) <= 1e-9);
        CHECK(ab == doctest::Approx(krDistance(b, a, p, C)).epsilon(1e-12));
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("regimes") {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 50; ++t) {
        auto a = randomMeasure(rng, 6, true), b = randomMeasure(rng, 6, true);
        double p = t % 2 ? 2.0 : 1.0;
        // lattice spacing is 1/3
        double C = 0.3, cp = std::pow(C, p);
        double direct = 0;
        auto both = a + b;
        for (const Point& x : both.points()) {
            double wa = 0, wb = 0;
            for (std::size_t k = 0; k < a.size(); ++k)
                if (a.point(k) == x) wa = a.weight(k);
            for (std::size_t k = 0; k < b.size(); ++k)
                if (b.point(k) == x) wb = b.weight(k);
            direct += std::abs(wa - wb);
        }
        CHECK(rel(uot(a, b, p, C).value, cp / 2 * direct) < 1e-9);

        // nested: a + b dominates b pointwise
        for (double c2 : {0.05, 0.5, 5.0})
            CHECK(rel(uot(a + b, b, p, c2).value, std::pow(c2, p) / 2 * a.totalMass()) < 1e-9);

        // large C, equal masses
        auto bb = b.scaled(a.totalMass() / b.totalMass());
        double ot = solveBalancedOT(a, bb, GroundCost::euclideanPower(p)).objective;
        CHECK(rel(uot(a, bb, p, 2.0).value, ot) < 1e-8);

        double prev = 0;
        for (int k = 1; k <= 10; ++k) {
            double v = uot(a, b, p, 0.15 * k).value;
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("transport graph") {
    UotResult empty = uot(line({0}, {1}), line({5}, {1}), 2, 1);
    auto g0 = transportGraph(empty);
    CHECK(g0.edges.empty());
    CHECK(g0.maxPathLength() == 0.0);

    auto one = transportGraph(uot(line({0}, {1}), line({1}, {1}), 2, 2));
    REQUIRE(one.edges.size() == 1);
    CHECK(one.maxPathLength() == doctest::Approx(1.0));

    // 0 -> 1 and 1 -> 2 chain through the shared location 1.
    auto chain = transportGraph(uot(line({0, 1}, {1, 1}), line({1, 2}, {1, 1}), 1, 10));
    CHECK(chain.maxPathLength() <= 10 + 1e-9);

    std::mt19937_64 rng(41);
    for (int t = 0; t < 100; ++t) {
        auto a = randomMeasure(rng, 8, t % 2), b = randomMeasure(rng, 8, t % 2);
        double p = t % 3 ? 2.0 : 1.0, C = 0.2 + 0.1 * (t % 8);
        auto r = uot(a, b, p, C);
        CHECK(transportGraph(r).maxPathLength() <= std::pow(C, p) + 1e-9);
        for (const auto& e : r.plan.entries) CHECK(distance(a.point(e.i), b.point(e.j)) <= C + 1e-12);
    }
}

TEST_CASE("padding invariance") {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 40; ++t) {
        auto a = randomMeasure(rng, 6), b = randomMeasure(rng, 6);
        double p = t % 2 ? 2.0 : 1.0, C = 0.25 + 0.1 * (t % 5);
        double v = uot(a, b, p, C).value;
        double base = std::max(a.totalMass(), b.totalMass());
        for (double extra : {0.0, 0.5, 1.0, 10.0})
            CHECK(std::abs(liftedValue(a, b, p, C, base + extra) - v) < 1e-9 * std::max(1.0, v));
        CHECK_THROWS_AS(liftedValue(a, b, p, C, 0.5 * base), ValidationError);
    }
}

TEST_CASE("explicit metric") {
    // three points on a path with unit edges
    DenseMatrix d(3, 3, 0.0);
    d(0, 1) = d(1, 0) = 1;
    d(1, 2) = d(2, 1) = 1;
    d(0, 2) = d(2, 0) = 2;
    auto metric = GroundCost::explicitMatrix(d, 1);
    auto a = line({0}, {1}), b = line({2}, {1});
    CHECK(uot(a, b, 1, 3, metric).value == doctest::Approx(2.0));
    CHECK(uot(a, b, 1, 1, metric).value == doctest::Approx(1.0));
}
