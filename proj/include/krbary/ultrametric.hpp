#pragma once

#include <cstddef>
#include <vector>

#include "krbary/cost.hpp"
#include "krbary/measure.hpp"

namespace krbary {

// Rooted tree stored as a parent array; par(root) = root. Heights decrease
// towards the leaves and vanish on them.
class UltrametricTree {
public:
    UltrametricTree(std::vector<std::size_t> parent, std::vector<double> height, std::vector<std::size_t> leaves);

    std::size_t size() const { return parent_.size(); }
    std::size_t root() const { return root_; }
    std::size_t parent(std::size_t v) const { return parent_.at(v); }
    double height(std::size_t v) const { return height_.at(v); }
    const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
    const std::vector<std::size_t>& leaves() const { return leaves_; }
    bool isLeaf(std::size_t v) const { return children_.at(v).empty(); }
    // Root first; every node appears after its parent.
    const std::vector<std::size_t>& topDown() const { return order_; }

    const std::vector<std::size_t>& parents() const { return parent_; }
    const std::vector<double>& heights() const { return height_; }

private:
    std::vector<std::size_t> parent_;
    std::vector<double> height_;
    std::vector<std::size_t> leaves_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> order_;
    std::size_t root_ = 0;
};

std::size_t lowestCommonAncestor(const UltrametricTree& t, std::size_t v, std::size_t w);
double treeDistance(const UltrametricTree& t, std::size_t v, std::size_t w);

// Same topology, heights 2^(p-1) h^p.
UltrametricTree pHeightTransform(const UltrametricTree& t, double p);

struct SubtreeDecomposition {
    std::vector<std::size_t> roots;
    // members[k]: all nodes of the subtree hanging from roots[k], root first.
    std::vector<std::vector<std::size_t>> members;
};

SubtreeDecomposition subtreeRoots(const UltrametricTree& t, double C);

// Closed-form UOT_{p,C} between node-indexed measures carried by the leaves.
// Vectors have one entry per node. O(|V|).
double krOnTree(const UltrametricTree& t, const std::vector<double>& mu, const std::vector<double>& nu, double p,
                double C);

// All-pairs node distances; usable with GroundCost::treeTable.
DenseMatrix nodeDistanceMatrix(const UltrametricTree& t);

// Node-indexed weights as a measure over 1-D points carrying the node id.
DiscreteMeasure nodeMeasure(const std::vector<double>& weights);

}  // namespace krbary
