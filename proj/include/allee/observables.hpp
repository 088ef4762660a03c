#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "allee/types.hpp"

namespace allee {

// Strict classification: exact ties with theta put a patch in neither set.
ConfigClass classify(const Configuration& c, double theta) noexcept;

// First absorbing class seen wins; all-neither means undecided.
Outcome absorption_outcome(std::span<const ConfigClass> classes) noexcept;

// Number of occupied patches (density exactly zero means vacant).
int n_occupied(const Configuration& c) noexcept;

// A mixing event on {x, y} is a collision when both endpoints are occupied.
bool is_collision(const Configuration& c, int x, int y) noexcept;

// Genealogy of mass spread under the mixing-only process, grown one mixing
// event at a time. Vertices are (patch, generation) pairs; the root is
// (root_patch, 0). A vertex is a leaf while (patch, generation+1) is absent.
// On a mixing event {x, y} every current leaf (x, i) spawns children
// (x, i+1) and (y, i+1), and symmetrically for leaves at y; events whose
// endpoints are both vacant in the accompanying configuration do nothing.
class DynamicGraph {
public:
    using Node = std::pair<int, int>;  // (patch, generation)

    DynamicGraph(int n_patches, int root_patch);

    // Apply one mixing event on patches {x, y}. `occupied_x`/`occupied_y`
    // describe the configuration *before* the event.
    void on_mixing(int x, int y, bool occupied_x, bool occupied_y);

    bool has_node(int patch, int generation) const noexcept;
    bool is_leaf(int patch, int generation) const noexcept;

    // All (patch, generation) leaves.
    std::vector<Node> leaves() const;
    int leaf_count() const noexcept { return leaf_count_; }

    // Distinct patches carrying at least one leaf. This equals the number of
    // occupied patches of the mixing-only process for all time; the raw leaf
    // count agrees with it up to the first collision.
    int leaf_patch_count() const noexcept;

    // Smallest generation among the leaves of `patch`, or -1 if the patch has
    // no node. Controls the density upper bound (1-mu)^generation.
    int min_leaf_generation(int patch) const noexcept;

    // Oriented binary tree check: root has in-degree 0, every other vertex
    // in-degree exactly 1, every out-degree is 0 or 2. (Cycles are impossible
    // because generations strictly increase along edges.)
    bool is_binary_tree() const;

    int n_nodes() const noexcept { return n_nodes_; }
    const std::vector<std::pair<Node, Node>>& arcs() const noexcept { return arcs_; }
    int root_patch() const noexcept { return root_; }

private:
    void add_node(int patch, int generation);

    int root_ = 0;
    int n_nodes_ = 0;
    int leaf_count_ = 0;
    // generations[p] holds sorted generations present at patch p; contiguous
    // from the smallest in practice, but kept general.
    std::vector<std::vector<int>> generations_;
    std::vector<std::pair<Node, Node>> arcs_;  // (parent, child)
};

// Structural invariants of the genealogy against the current configuration.
struct StructureReport {
    bool tree_ok = true;        // only meaningful pre-collision
    bool leaf_count_ok = true;  // leaf patches == occupied patches
    bool leaf_bound_ok = true;  // density(x) <= (1-mu)^i + tol at each leaf (x,i)
    std::vector<std::string> violations;
};

StructureReport check_structure(const DynamicGraph& h, const Configuration& c, double mu,
                                bool pre_collision, double tol = 1e-12);

}  // namespace allee
