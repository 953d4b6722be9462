#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "krbary/barycenter.hpp"
#include "krbary/centroids.hpp"
#include "krbary/error.hpp"
#include "krbary/kr_distance.hpp"

using namespace krbary;

namespace {

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws) {
    std::vector<Point> pts;
    for (double x : xs) pts.push_back(Point{x});
    return DiscreteMeasure(pts, ws);
}

// Atoms on a 4x4 lattice of spacing 1/3 with weights in {1,2,3}/2.
DiscreteMeasure latticeMeasure(std::mt19937_64& rng, std::size_t maxAtoms) {
    std::uniform_int_distribution<std::size_t> n(1, maxAtoms);
    std::uniform_int_distribution<int> site(0, 3), w(1, 3);
    std::vector<Point> pts;
    std::vector<double> ws;
    for (std::size_t k = n(rng); k > 0; --k) {
        Point x{site(rng) / 3.0, site(rng) / 3.0};
        if (std::find(pts.begin(), pts.end(), x) != pts.end()) continue;
        pts.push_back(x);
        ws.push_back(w(rng) / 2.0);
    }
    return DiscreteMeasure(pts, ws);
}

BarycenterProblem randomProblem(std::mt19937_64& rng, std::size_t J, std::size_t maxAtoms, double p, double C) {
    BarycenterProblem pr;
    pr.p = p;
    pr.C = C;
    for (std::size_t i = 0; i < J; ++i) pr.measures.push_back(latticeMeasure(rng, maxAtoms));
    return pr;
}

DiscreteMeasure scaledCoords(const DiscreteMeasure& m, double s) {
    std::vector<Point> pts;
    for (const auto& x : m.points()) {
        std::vector<double> y = x.coords();
        for (auto& c : y) c *= s;
        pts.push_back(Point(y));
    }
    return DiscreteMeasure(pts, m.weights());
}

double diameter(const BarycenterProblem& pr) {
    double d = 0;
    for (const auto& a : pr.measures)
        for (const auto& b : pr.measures)
            for (const auto& x : a.points())
                for (const auto& y : b.points()) d = std::max(d, distance(x, y));
    return d;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

DiscreteMeasure spread(std::size_t n) {
    std::vector<Point> pts;
    for (std::size_t k = 0; k < n; ++k) pts.push_back(Point{double(k)});
    return DiscreteMeasure(pts, std::vector<double>(n, 1.0));
}

bool near(const Point& a, const Point& b, double tol) { return distance(a, b) <= tol; }

}  // namespace

TEST_SUITE_BEGIN("kr-barycenter");

TEST_CASE("barycentric point") {
    CHECK(barycentricPoint(std::vector<Point>{{0.3, 0.4}}, 2) == Point{0.3, 0.4});
    CHECK(barycentricPoint(std::vector<Point>{{0}, {2}}, 2)[0] == doctest::Approx(1.0));
    CHECK(barycentricPoint(std::vector<Point>{{0}, {0}, {3}}, 1)[0] == doctest::Approx(0.0));
    CHECK(barycentricPoint(std::vector<Point>{{0}, {1}, {3}, {7}}, 1)[0] == doctest::Approx(1.0));
    CHECK_THROWS_WITH_AS(barycentricPoint(std::vector<Point>{{0}}, 3), "unsupported exponent for centroid enumeration",
                         ValidationError);

    // Geometric median: compare against a brute-force grid search.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 20; ++k) {
        std::vector<Point> pts;
        for (int i = 0; i < 5; ++i) pts.push_back(Point{u(rng), u(rng)});
        auto cost = [&](const Point& y) {
            double s = 0;
            for (const auto& x : pts) s += distance(x, y);
            return s;
        };
        Point y = barycentricPoint(pts, 1);
        double best = cost(y);
        for (int a = 0; a <= 200; ++a)
            for (int b = 0; b <= 200; ++b) CHECK(cost(Point{a / 200.0, b / 200.0}) >= best - 1e-9);
    }
}

TEST_CASE("centroid sets") {
    BarycenterProblem pr{{line({0}, {1}), line({2}, {1})}, 2, 1};
    auto full = fullCentroidSet(pr);
    std::vector<double> xs;
    for (const auto& y : full.points) xs.push_back(y[0]);
    std::sort(xs.begin(), xs.end());
    CHECK(xs == std::vector<double>{0, 1, 2});
    REQUIRE(full.provenance.size() == full.points.size());

    xs.clear();
    for (const auto& y : restrictedCentroidSet(pr).points) xs.push_back(y[0]);
    std::sort(xs.begin(), xs.end());
    CHECK(xs == std::vector<double>{0, 2});

    pr.C = 2;
    CHECK(restrictedCentroidSet(pr).points.size() == 3);
    pr.C = 1e-3;
    pr.measures = {line({0}, {1}), line({2}, {1}), line({5}, {1})};
    CHECK(restrictedCentroidSet(pr).points.empty());

    BarycenterProblem one{{line({0.5}, {1})}, 2, 1};
    CHECK(fullCentroidSet(one).points == std::vector<Point>{{0.5}});

    std::mt19937_64 rng(5);
    auto big = randomProblem(rng, 6, 1, 2, 1);
    for (auto& m : big.measures) m = spread(12);
    CHECK_THROWS_WITH_AS(fullCentroidSet(big), "centroid enumeration too large", GuardError);
}

TEST_CASE("centroid set provenance") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 30; ++k) {
        auto pr = randomProblem(rng, 3, 3, 2, 0.5);
        std::size_t J = pr.count();
        double cp = std::pow(pr.C, pr.p);
        auto rs = restrictedCentroidSet(pr);
        for (std::size_t n = 0; n < rs.points.size(); ++n) {
            const auto& src = rs.provenance[n];
            std::size_t L = src.measures.size();
            CHECK(2 * L >= J);
            std::vector<Point> xs;
            double sum = 0;
            for (std::size_t l = 0; l < L; ++l) {
                xs.push_back(pr.measures[src.measures[l]].point(src.atoms[l]));
                double d = std::pow(distance(xs.back(), rs.points[n]), pr.p);
                CHECK(d <= cp + 1e-12);
                sum += d;
            }
            CHECK(sum <= cp * (2.0 * L - J) / 2 + 1e-12);
            CHECK(near(barycentricPoint(xs, pr.p), rs.points[n], 1e-12));
        }
        // Restricted points are a subset of the full set.
        auto fs = fullCentroidSet(pr);
        for (const auto& y : rs.points)
            CHECK(std::any_of(fs.points.begin(), fs.points.end(), [&](const Point& z) { return near(y, z, 1e-9); }));
    }
}

TEST_CASE("truncated barycentric point") {
    std::vector<AugmentedPoint> allDummy{DummyPoint{}, DummyPoint{}};
    CHECK(isDummy(truncatedBarycentricPoint(allDummy, 2, 1)));
    std::vector<AugmentedPoint> half{Point{0.0}, DummyPoint{}};
    CHECK(isDummy(truncatedBarycentricPoint(half, 2, 1)));
    std::vector<AugmentedPoint> pair{Point{0.0}, Point{1.0}};
    auto y = truncatedBarycentricPoint(pair, 2, 10);
    REQUIRE(!isDummy(y));
    CHECK(std::get<Point>(y)[0] == doctest::Approx(0.5));
    std::vector<AugmentedPoint> many(17, Point{0.0});
    CHECK_THROWS_WITH_AS(truncatedBarycentricPoint(many, 2, 1), "combinatorial centroid too large", GuardError);

    // Brute force over a fine grid plus the dummy point.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 40; ++k) {
        std::vector<AugmentedPoint> in;
        for (int i = 0; i < 4; ++i) {
            if (rng() % 4 == 0)
                in.push_back(DummyPoint{});
            else
                in.push_back(Point{u(rng)});
        }
        double C = 0.1 + 0.5 * u(rng);
        auto best = truncatedBarycentricPoint(in, 2, C);
        double v = truncatedCost(in, best, 2, C);
        CHECK(v <= truncatedCost(in, DummyPoint{}, 2, C) + 1e-12);
        for (int g = 0; g <= 1000; ++g) CHECK(v <= truncatedCost(in, Point{g / 1000.0}, 2, C) + 1e-12);
    }
}

TEST_CASE("fixed support examples") {
    BarycenterProblem one{{line({0, 1}, {1, 2})}, 2, 1};
    auto s = solveFixedSupport(one, one.measures[0].points());
    CHECK(s.frechetValue == doctest::Approx(0.0));
    CHECK(s.barycenter.totalMass() == doctest::Approx(3.0));

    for (double C : {0.5, 1.0, 3.0}) {
        BarycenterProblem two{{line({0}, {1}), line({0}, {3})}, 2, C};
        auto r = solveFixedSupport(two, {Point{0.0}});
        CHECK(r.frechetValue == doctest::Approx(C * C / 2));
        double a = r.barycenter.totalMass();
        CHECK(a >= 1 - 1e-9);
        CHECK(a <= 3 + 1e-9);
    }

    BarycenterProblem three{{line({0}, {1}), line({1}, {1}), line({2}, {1})}, 2, 10};
    auto t = solveFixedSupport(three, {Point{1.0}});
    CHECK(t.barycenter.totalMass() == doctest::Approx(1.0));
    CHECK(t.frechetValue == doctest::Approx(2.0 / 3));
    CHECK(t.solverValue == doctest::Approx(2.0 / 3));
}

TEST_CASE("multi-marginal examples") {
    BarycenterProblem pr{{line({0}, {1}), line({2}, {1})}, 2, 10};
    auto s = solveMultiMarginal(pr);
    REQUIRE(s.barycenter.size() == 1);
    CHECK(s.barycenter.point(0)[0] == doctest::Approx(1.0));
    CHECK(s.barycenter.weight(0) == doctest::Approx(1.0));
    CHECK(s.frechetValue == doctest::Approx(1.0));
    CHECK(s.solverValue == doctest::Approx(1.0));

    BarycenterProblem far{{line({0}, {1}), line({5}, {2}), line({10}, {3})}, 2, 0.1};
    auto f = solveMultiMarginal(far);
    CHECK(f.barycenter.size() == 0);
    CHECK(f.frechetValue == doctest::Approx(0.01 / 2 * 2));

    std::mt19937_64 rng(1);
    auto big = randomProblem(rng, 5, 1, 2, 1);
    for (auto& m : big.measures) m = spread(12);
    CHECK_THROWS_WITH_AS(solveMultiMarginal(big), "multi-marginal problem too large", GuardError);
}

TEST_CASE("two measures reduce to UOT") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 30; ++k) {
        double C = 0.2 + 0.2 * (k % 5);
        auto pr = randomProblem(rng, 2, 3, 1, C);
        // p = 1: the barycenter value is half the distance.
        double half = uot(pr.measures[0], pr.measures[1], 1, C).value / 2;
        CHECK(solveMultiMarginal(pr).frechetValue == doctest::Approx(half).epsilon(1e-8));
        CHECK(solveCentroidLp(pr).frechetValue == doctest::Approx(half).epsilon(1e-8));
        // p = 2: half the UOT value for the metric d / sqrt(2).
        pr.p = 2;
        double s = 1 / std::sqrt(2.0);
        double q = uot(scaledCoords(pr.measures[0], s), scaledCoords(pr.measures[1], s), 2, C).value / 2;
        CHECK(solveMultiMarginal(pr).frechetValue == doctest::Approx(q).epsilon(1e-8));
        CHECK(solveCentroidLp(pr).frechetValue == doctest::Approx(q).epsilon(1e-8));
    }
}

TEST_CASE("structural properties on random instances") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 40; ++k) {
        double C = 0.15 + 0.1 * (k % 8);
        auto pr = randomProblem(rng, 3, 3, 2, C);
        auto mm = solveMultiMarginal(pr);
        auto lp = solveCentroidLp(pr);
        double total = pr.totalInputMass();

        // Multi-marginal and centroid LP are different formulations of one optimum.
        CHECK(mm.frechetValue == doctest::Approx(lp.frechetValue).epsilon(1e-8));
        CHECK(mm.solverValue == doctest::Approx(mm.frechetValue).epsilon(1e-8));
        CHECK(lp.solverValue == doctest::Approx(lp.frechetValue).epsilon(1e-8));

        for (const auto* s : {&mm, &lp}) CHECK(s->barycenter.totalMass() <= 2.0 / 3 * total + 1e-9);

        auto rs = restrictedCentroidSet(pr);
        for (const auto& y : mm.barycenter.points())
            CHECK(std::any_of(rs.points.begin(), rs.points.end(), [&](const Point& z) { return near(y, z, 1e-7); }));

        std::size_t atoms = 0;
        for (const auto& m : pr.measures) atoms += m.size();
        CHECK(mm.barycenter.size() <= std::min(rs.points.size(), atoms));

        // Each barycenter atom sends its mass to at most one atom of each measure.
        for (const auto& plan : mm.plans) {
            std::vector<int> out(mm.barycenter.size(), 0);
            for (const auto& e : plan.plan.entries)
                if (e.mass > 1e-9) ++out[e.i];
            for (int c : out) CHECK(c <= 1);
        }

        // Any candidate measure does no better.
        auto med = medianBarycenter(pr);
        CHECK(frechetValue(pr, med) >= mm.frechetValue - 1e-9);
        for (std::size_t i = 0; i < pr.count(); ++i)
            CHECK(frechetValue(pr, pr.measures[i]) >= mm.frechetValue - 1e-9);
    }
}

TEST_CASE("value is non-decreasing in C") {
    std::mt19937_64 rng(29);
    for (int k = 0; k < 15; ++k) {
        auto pr = randomProblem(rng, 3, 3, 2, 0.1);
        double prev = 0;
        for (double C : {0.1, 0.2, 0.35, 0.5, 0.8, 1.2, 2.0}) {
            pr.C = C;
            double v = solveMultiMarginal(pr).frechetValue;
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("small C gives the median barycenter") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 30; ++k) {
        auto pr = randomProblem(rng, 2 + k % 3, 3, 1 + k % 2, 1);
        // C just below the smallest positive distance between data and centroids.
        auto cs = fullCentroidSet(pr).points;
        double dmin = 1e9;
        for (const auto& m : pr.measures)
            for (const auto& x : m.points())
                for (const auto& y : cs)
                    if (distance(x, y) > 1e-9) dmin = std::min(dmin, distance(x, y));
        for (std::size_t a = 0; a < cs.size(); ++a)
            for (std::size_t b = 0; b < cs.size(); ++b)
                if (distance(cs[a], cs[b]) > 1e-9) dmin = std::min(dmin, distance(cs[a], cs[b]));
        pr.C = 0.99 * dmin;
        double mm = solveMultiMarginal(pr).frechetValue;
        CHECK(mm == doctest::Approx(frechetValue(pr, medianBarycenter(pr))).epsilon(1e-8));
    }
}

TEST_CASE("large C gives the median mass") {
    std::mt19937_64 rng(37);
    for (int k = 0; k < 20; ++k) {
        auto pr = randomProblem(rng, 3, 2, 2, 1);
        pr.C = std::pow(3.0, 1 / pr.p) * diameter(pr) + 0.1;
        std::vector<double> masses;
        for (const auto& m : pr.measures) masses.push_back(m.totalMass());
        CHECK(solveMultiMarginal(pr).barycenter.totalMass() == doctest::Approx(median(masses)).epsilon(1e-9));
    }
}

TEST_CASE("equal masses and large C match the Wasserstein barycenter") {
    std::mt19937_64 rng(41);
    for (int k = 0; k < 20; ++k) {
        auto pr = randomProblem(rng, 3, 2, 2, 1);
        for (auto& m : pr.measures) m = m.scaled(1.0 / m.totalMass());
        pr.C = std::sqrt(2.0) * diameter(pr) + 0.1;
        CHECK(solveMultiMarginal(pr).frechetValue ==
              doctest::Approx(wassersteinBarycenterValue(pr)).epsilon(1e-8));
    }
    BarycenterProblem bad{{line({0}, {1}), line({1}, {2})}, 2, 1};
    CHECK_THROWS_AS(wassersteinBarycenterValue(bad), ValidationError);
}

TEST_CASE("augmented functional agrees with the plain one") {
    std::mt19937_64 rng(43);
    for (int k = 0; k < 40; ++k) {
        auto pr = randomProblem(rng, 3, 3, 1 + k % 2, 0.2 + 0.1 * (k % 6));
        auto mu = latticeMeasure(rng, 4);
        if (mu.totalMass() > pr.totalInputMass()) mu = mu.scaled(pr.totalInputMass() / mu.totalMass());
        CHECK(frechetValue(pr, mu) == doctest::Approx(augmentedFrechetValue(pr, mu)).epsilon(1e-9));
    }
}

TEST_CASE("median barycenter") {
    BarycenterProblem co{{line({0}, {1}), line({0}, {2}), line({0}, {5})}, 2, 1};
    auto m = medianBarycenter(co);
    REQUIRE(m.size() == 1);
    CHECK(m.weight(0) == doctest::Approx(2.0));
    BarycenterProblem disjoint{{line({0}, {1}), line({1}, {1})}, 2, 1};
    CHECK(medianBarycenter(disjoint).size() == 0);
    BarycenterProblem same{{line({0, 1}, {1, 2}), line({0, 1}, {1, 2}), line({0, 1}, {1, 2})}, 2, 1};
    auto s = medianBarycenter(same);
    CHECK(s.totalMass() == doctest::Approx(3.0));
    CHECK(s.size() == 2);
}

TEST_CASE("cluster decomposition") {
    BarycenterProblem pr{{line({0, 10}, {1, 3}), line({0, 10}, {2, 1}), line({0, 10}, {4, 2})}, 2, 1};
    std::vector<std::vector<Point>> clusters{{Point{0.0}}, {Point{10.0}}};
    auto s = clusterDecompose(pr, clusters);
    auto med = medianBarycenter(pr);
    CHECK(s.barycenter.totalMass() == doctest::Approx(med.totalMass()));
    CHECK(s.frechetValue == doctest::Approx(frechetValue(pr, med)));
    CHECK(s.frechetValue == doctest::Approx(solveMultiMarginal(pr).frechetValue));

    BarycenterProblem tight{{line({0, 0.5}, {1, 3}), line({0.5}, {2}), line({0, 0.25}, {4, 2})}, 2, 1};
    auto single = clusterDecompose(tight, {{Point{0.0}, Point{0.25}, Point{0.5}}});
    CHECK(single.frechetValue == doctest::Approx(solveMultiMarginal(tight).frechetValue).epsilon(1e-9));
    CHECK_THROWS_WITH_AS(clusterDecompose(pr, {{Point{0.0}}}), doctest::Contains("cluster preconditions failed"),
                         ValidationError);
    BarycenterProblem close{{line({0, 1.2}, {1, 1}), line({0, 1.2}, {1, 1})}, 2, 1};
    CHECK_THROWS_WITH_AS(clusterDecompose(close, {{Point{0.0}}, {Point{1.2}}}),
                         doctest::Contains("cluster preconditions failed"), ValidationError);

    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0, 0.3);
    for (int k = 0; k < 10; ++k) {
        BarycenterProblem q;
        q.p = 2;
        q.C = 0.45;
        std::vector<std::vector<Point>> cl(2);
        for (int i = 0; i < 3; ++i) {
            std::vector<Point> pts{{u(rng), u(rng)}, {5 + u(rng), u(rng)}, {u(rng), 5 + u(rng)}};
            std::vector<double> ws{1.0 + i % 2, 1.0, 0.5 + i};
            q.measures.push_back(DiscreteMeasure(pts, ws));
        }
        auto boxes = clustersFromBoxes(q, {{Point{-1, -1}, Point{1, 1}}, {Point{4, -1}, Point{6, 1}}, {Point{-1, 4}, Point{1, 6}}});
        REQUIRE(boxes.size() == 3);
        auto parts = clusterDecompose(q, boxes, ClusterSolver::MultiMarginal, {}, 2);
        CHECK(parts.frechetValue == doctest::Approx(solveCentroidLp(q).frechetValue).epsilon(1e-8));
    }
}
