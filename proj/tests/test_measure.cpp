#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "krbary/cost.hpp"
#include "krbary/error.hpp"
#include "krbary/measure.hpp"

using namespace krbary;

namespace {

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws) {
    std::vector<Point> pts;
    for (double x : xs) pts.push_back(Point{x});
    return DiscreteMeasure(pts, ws);
}

DiscreteMeasure randomMeasure(std::mt19937_64& rng, std::size_t atoms) {
    // few lattice sites so supports overlap
    std::uniform_int_distribution<int> site(0, 4);
    std::uniform_real_distribution<double> w(0.0, 2.0);
    std::vector<Point> pts;
    std::vector<double> ws;
    for (std::size_t k = 0; k < atoms; ++k) {
        pts.push_back(Point{double(site(rng)), double(site(rng))});
        ws.push_back(w(rng));
    }
    return DiscreteMeasure(pts, ws);
}

}  // namespace

TEST_SUITE_BEGIN("geometry-core");

TEST_CASE("total mass") {
    CHECK(totalMass(DiscreteMeasure::empty(2)) == 0.0);
    DiscreteMeasure mu({{0, 0}, {1, 0}}, {1, 2});
    CHECK(totalMass(mu) == 3.0);
    std::vector<Point> ellipse;
    for (int k = 0; k < 50; ++k) {
        double t = 2 * M_PI * k / 50;
        ellipse.push_back(Point{0.5 + 0.2 * std::cos(t), 0.5 + 0.1 * std::sin(t)});
    }
    CHECK(totalMass(DiscreteMeasure(ellipse, std::vector<double>(50, 1.0))) == doctest::Approx(50.0));
}

TEST_CASE("construction prunes and merges") {
    DiscreteMeasure mu({{0.0}, {1.0}, {0.0}, {2.0}}, {1.0, 0.0, 2.0, 1e-13});
    REQUIRE(mu.size() == 1);
    CHECK(mu.point(0) == Point{0.0});
    CHECK(mu.weight(0) == 3.0);
    CHECK_THROWS_AS(DiscreteMeasure({{0.0}}, {-1.0}), ValidationError);
    CHECK_THROWS_AS(DiscreteMeasure({{0.0}}, {NAN}), ValidationError);
    CHECK_THROWS_AS(DiscreteMeasure({{0.0}, {0.0, 1.0}}, {1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(Point({0.0, INFINITY}), ValidationError);
}

TEST_CASE("total variation") {
    auto mu = line({0, 1}, {1, 2});
    CHECK(totalVariation(mu, mu) == 0.0);
    CHECK(totalVariation(line({0}, {1}), line({1}, {1})) == doctest::Approx(1.0));
    CHECK(totalVariation(line({0}, {2}), line({0}, {1})) == doctest::Approx(0.5));
}

TEST_CASE("total variation is a metric") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        auto a = randomMeasure(rng, 4), b = randomMeasure(rng, 4), c = randomMeasure(rng, 4);
        CHECK(totalVariation(a, a) == 0.0);
        CHECK(totalVariation(a, b) == doctest::Approx(totalVariation(b, a)).epsilon(1e-14));
        CHECK(totalVariation(a, c) <= totalVariation(a, b) + totalVariation(b, c) + 1e-12);
        if (totalVariation(a, b) == 0.0) CHECK(a.size() == b.size());
    }
}

TEST_CASE("augment measure") {
    auto mu = line({0, 1}, {1, 2});
    auto five = augmentMeasure(mu, 5);
    CHECK(five.dummyWeight == doctest::Approx(2.0));
    CHECK(five.totalMass() == doctest::Approx(5.0));
    CHECK(augmentMeasure(mu, 3).dummyWeight == 0.0);
    CHECK_THROWS_WITH_AS(augmentMeasure(mu, 2), "insufficient padding mass", ValidationError);

    const DiscreteMeasure& back = five.restrictToSpace();
    REQUIRE(back.size() == mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        CHECK(back.point(k) == mu.point(k));
        CHECK(back.weight(k) == mu.weight(k));
    }
}

TEST_CASE("augmented cost values") {
    auto c = GroundCost::augmentedTruncated(2, 1.5);
    AugmentedPoint x = Point{0.0, 0.0}, y = Point{1.0, 0.0}, far = Point{5.0, 0.0}, d = DummyPoint{};
    CHECK(c(x, x) == 0.0);
    CHECK(c(x, y) == doctest::Approx(1.0));
    CHECK(c(x, far) == doctest::Approx(2.25));
    CHECK(c(x, d) == doctest::Approx(1.125));
    CHECK(c(d, y) == doctest::Approx(1.125));
    CHECK(c(d, d) == 0.0);
    CHECK_THROWS_AS(GroundCost::euclideanPower(2)(x, d), ValidationError);
}

TEST_CASE("augmented metric triangle inequality") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (double p : {1.0, 2.0, 3.0})
        for (double C : {0.3, 1.0, 3.0}) {
            auto cost = GroundCost::augmentedTruncated(p, C);
            auto metric = [&](const AugmentedPoint& a, const AugmentedPoint& b) { return std::pow(cost(a, b), 1 / p); };
            for (int t = 0; t < 200; ++t) {
                std::vector<AugmentedPoint> pts;
                for (int k = 0; k < 3; ++k) {
                    if (rng() % 4 == 0)
                        pts.push_back(DummyPoint{});
                    else
                        pts.push_back(Point{u(rng), u(rng)});
                }
                CHECK(metric(pts[0], pts[2]) <= metric(pts[0], pts[1]) + metric(pts[1], pts[2]) + 1e-12);
                CHECK(metric(pts[0], pts[1]) == doctest::Approx(metric(pts[1], pts[0])));
            }
        }
}

TEST_CASE("explicit and tree tables") {
    DenseMatrix d(2, 2, 0.0);
    d(0, 1) = d(1, 0) = 3.0;
    auto c = GroundCost::explicitMatrix(d, 2);
    CHECK(c(Point{0.0}, Point{1.0}) == 9.0);
    CHECK(c.distance(Point{0.0}, Point{1.0}) == 3.0);
    CHECK_THROWS_WITH_AS(c(Point{0.0}, Point{2.0}), "unknown node id", ValidationError);
    CHECK_THROWS_AS(c(Point{0.5}, Point{1.0}), ValidationError);
}

TEST_CASE("dimension checks") {
    CHECK_THROWS_WITH_AS(distance(Point{0.0}, Point{0.0, 1.0}), "dimension mismatch", ValidationError);
    std::vector<DiscreteMeasure> ms{line({0}, {1}), DiscreteMeasure({{0.0, 1.0}}, {1.0})};
    CHECK_THROWS_AS(commonDimension(ms), ValidationError);
    auto sum = line({0, 1}, {1, 1}) + line({1, 2}, {1, 1});
    CHECK(sum.size() == 3);
    CHECK(sum.totalMass() == doctest::Approx(4.0));
}
