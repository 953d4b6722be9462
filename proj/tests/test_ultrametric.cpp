#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "krbary/error.hpp"
#include "krbary/kr_distance.hpp"
#include "krbary/ultrametric.hpp"

using namespace krbary;

namespace {

// r(0) over u(1), v(2)
UltrametricTree twoLeaves(double h = 1) { return UltrametricTree({0, 0, 0}, {h, 0, 0}, {1, 2}); }

// r -> v1, v2;  v1 -> v3, v4;  v3 -> v7, v8;  v2 -> v5, v6
UltrametricTree sampleTree() {
    std::vector<std::size_t> parent{0, 0, 0, 1, 1, 2, 2, 3, 3};
    std::vector<double> height{4, 3, 2, 1, 0, 0, 0, 0, 0};
    return UltrametricTree(parent, height, {4, 5, 6, 7, 8});
}

// Random agglomeration: merge 2 or 3 clusters under a node strictly above them.
UltrametricTree randomTree(std::mt19937_64& rng, std::size_t leaves) {
    std::vector<std::size_t> parent;
    std::vector<double> height;
    std::vector<std::size_t> open, leafIds;
    for (std::size_t k = 0; k < leaves; ++k) {
        parent.push_back(k);
        height.push_back(0);
        open.push_back(k);
        leafIds.push_back(k);
    }
    std::uniform_real_distribution<double> step(0.05, 1.0);
    while (open.size() > 1) {
        std::shuffle(open.begin(), open.end(), rng);
        std::size_t take = std::min<std::size_t>(open.size(), 2 + rng() % 2);
        std::size_t node = parent.size();
        double h = 0;
        for (std::size_t t = 0; t < take; ++t) h = std::max(h, height[open[open.size() - 1 - t]]);
        parent.push_back(node);
        height.push_back(h + step(rng));
        for (std::size_t t = 0; t < take; ++t) {
            parent[open.back()] = node;
            open.pop_back();
        }
        open.push_back(node);
    }
    return UltrametricTree(parent, height, leafIds);
}

std::vector<double> leafWeights(std::mt19937_64& rng, const UltrametricTree& t) {
    std::vector<double> w(t.size(), 0.0);
    std::uniform_real_distribution<double> u(0, 2);
    for (std::size_t l : t.leaves())
        if (rng() % 3) w[l] = u(rng);
    return w;
}

double lpValue(const UltrametricTree& t, const std::vector<double>& mu, const std::vector<double>& nu, double p, double C) {
    auto metric = GroundCost::treeTable(nodeDistanceMatrix(t), 1);
    return uot(nodeMeasure(mu), nodeMeasure(nu), p, C, metric).value;
}

}  // namespace

TEST_SUITE_BEGIN("ultrametric-tree");

TEST_CASE("validation") {
    CHECK_NOTHROW(twoLeaves());
    CHECK_THROWS_AS(UltrametricTree({0, 0, 1}, {1, 0, 0}, {1, 2}), ValidationError);  // node 1 is not a leaf
    CHECK_THROWS_AS(UltrametricTree({0, 0, 0}, {1, 2, 0}, {1, 2}), ValidationError);  // child above parent
    CHECK_THROWS_AS(UltrametricTree({0, 0, 0}, {1, 0.5, 0}, {1, 2}), ValidationError);  // leaf height
    CHECK_THROWS_AS(UltrametricTree({0, 1, 0}, {1, 0, 0}, {1, 2}), ValidationError);  // two roots
    CHECK_THROWS_AS(UltrametricTree({1, 2, 1}, {0, 1, 2}, {0}), ValidationError);  // cycle, no root
    CHECK_THROWS_AS(UltrametricTree({0, 5}, {1, 0}, {1}), ValidationError);
}

TEST_CASE("tree distance") {
    auto t = twoLeaves();
    CHECK(treeDistance(t, 1, 1) == 0.0);
    CHECK(treeDistance(t, 1, 2) == 2.0);
    CHECK(treeDistance(t, 1, 0) == 1.0);
    CHECK_THROWS_AS(treeDistance(t, 1, 7), ValidationError);
    auto f = sampleTree();
    CHECK(treeDistance(f, 7, 8) == 2.0);
    CHECK(treeDistance(f, 7, 4) == 6.0);
    CHECK(treeDistance(f, 7, 5) == 8.0);
}

TEST_CASE("p-height transform") {
    auto t = sampleTree();
    auto same = pHeightTransform(t, 1);
    CHECK(same.heights() == t.heights());
    CHECK(pHeightTransform(twoLeaves(), 2).height(0) == 2.0);

    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        auto r = randomTree(rng, 2 + rng() % 10);
        for (double p : {1.5, 2.0, 3.0}) {
            auto tp = pHeightTransform(r, p);
            for (std::size_t v : r.leaves())
                for (std::size_t w : r.leaves())
                    CHECK(std::pow(treeDistance(r, v, w), p) ==
                          doctest::Approx(treeDistance(tp, v, w)).epsilon(1e-12));
        }
    }
}

TEST_CASE("subtree roots") {
    auto t = sampleTree();
    CHECK(subtreeRoots(t, 8).roots == std::vector<std::size_t>{0});
    CHECK(subtreeRoots(t, 100).roots == std::vector<std::size_t>{0});
    auto leaves = subtreeRoots(t, 1).roots;
    std::sort(leaves.begin(), leaves.end());
    CHECK(leaves == std::vector<std::size_t>{4, 5, 6, 7, 8});
    // h1 < C/2 < h0
    auto two = subtreeRoots(t, 7);
    CHECK(two.roots == std::vector<std::size_t>{1, 2});
    REQUIRE(two.members.size() == 2);
    auto m1 = two.members[0];
    std::sort(m1.begin(), m1.end());
    CHECK(m1 == std::vector<std::size_t>{1, 3, 4, 7, 8});

    std::mt19937_64 rng(9);
    for (int k = 0; k < 50; ++k) {
        auto r = randomTree(rng, 2 + rng() % 10);
        for (double C : {0.1, 0.5, 1.0, 2.0, 4.0}) {
            auto d = subtreeRoots(r, C);
            std::vector<int> hits(r.size(), 0);
            for (const auto& m : d.members)
                for (std::size_t v : m) ++hits[v];
            for (std::size_t l : r.leaves()) CHECK(hits[l] == 1);
        }
    }
}

TEST_CASE("closed form examples") {
    auto t = twoLeaves();
    std::vector<double> mu{0, 2, 0}, nu{0, 0, 1};
    CHECK(krOnTree(t, mu, nu, 1, 4) == doctest::Approx(4.0));
    CHECK(lpValue(t, mu, nu, 1, 4) == doctest::Approx(4.0));
    CHECK(krOnTree(t, mu, nu, 1, 1) == doctest::Approx(1.5));
    CHECK(lpValue(t, mu, nu, 1, 1) == doctest::Approx(1.5));
    CHECK(krOnTree(t, mu, mu, 2, 3) == 0.0);
    CHECK_THROWS_WITH_AS(krOnTree(t, {1, 0, 0}, nu, 1, 1), "interior mass unsupported", ValidationError);
    CHECK_THROWS_AS(krOnTree(t, {0, -1, 0}, nu, 1, 1), ValidationError);
}

TEST_CASE("closed form matches the LP on random trees") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 200; ++k) {
        auto t = randomTree(rng, 2 + rng() % 11);
        auto mu = leafWeights(rng, t), nu = leafWeights(rng, t);
        double hr = t.height(t.root());
        for (double p : {1.0, 2.0})
            for (double C : {0.1, 0.5, 1.0, 2.0 * hr, 4.0}) {
                double closed = krOnTree(t, mu, nu, p, C);
                double lp = lpValue(t, mu, nu, p, C);
                CHECK(std::abs(closed - lp) <= 1e-8 * std::max(1.0, lp));
            }
    }
}

TEST_CASE("subtrees are independent") {
    std::mt19937_64 rng(19);
    for (int k = 0; k < 50; ++k) {
        auto t = randomTree(rng, 3 + rng() % 9);
        auto mu = leafWeights(rng, t), nu = leafWeights(rng, t);
        double C = 0.8;
        double whole = krOnTree(t, mu, nu, 2, C), parts = 0;
        for (const auto& m : subtreeRoots(t, C).members) {
            std::vector<double> a(t.size(), 0.0), b(t.size(), 0.0);
            for (std::size_t v : m) {
                a[v] = mu[v];
                b[v] = nu[v];
            }
            parts += lpValue(t, a, b, 2, C);
        }
        CHECK(whole == doctest::Approx(parts).epsilon(1e-9));
    }
}
