#include "allee/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace allee {

const char* to_string(ConfigClass c) noexcept {
    switch (c) {
        case ConfigClass::upper: return "upper";
        case ConfigClass::lower: return "lower";
        case ConfigClass::neither: return "neither";
    }
    return "?";
}

const char* to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::expansion: return "expansion";
        case Outcome::extinction: return "extinction";
        case Outcome::undecided: return "undecided";
    }
    return "?";
}

ConfigClass classify(const Configuration& c, double theta) noexcept {
    bool all_above = true;
    bool all_below = true;
    for (const double v : c) {
        if (!(v > theta)) all_above = false;
        if (!(v < theta)) all_below = false;
        if (!all_above && !all_below) return ConfigClass::neither;
    }
    if (all_above) return ConfigClass::upper;
    return ConfigClass::lower;  // c is never empty both ways; empty treated as lower+upper is impossible here
}

Outcome absorption_outcome(std::span<const ConfigClass> classes) noexcept {
    for (const ConfigClass c : classes) {
        if (c == ConfigClass::upper) return Outcome::expansion;
        if (c == ConfigClass::lower) return Outcome::extinction;
    }
    return Outcome::undecided;
}

int n_occupied(const Configuration& c) noexcept {
    int n = 0;
    for (const double v : c) n += (v != 0.0);
    return n;
}

bool is_collision(const Configuration& c, int x, int y) noexcept {
    return c[static_cast<std::size_t>(x)] != 0.0 && c[static_cast<std::size_t>(y)] != 0.0;
}

DynamicGraph::DynamicGraph(int n_patches, int root_patch)
    : root_(root_patch), generations_(static_cast<std::size_t>(n_patches)) {
    add_node(root_patch, 0);
}

bool DynamicGraph::has_node(int patch, int generation) const noexcept {
    const auto& g = generations_[static_cast<std::size_t>(patch)];
    return std::binary_search(g.begin(), g.end(), generation);
}

bool DynamicGraph::is_leaf(int patch, int generation) const noexcept {
    return has_node(patch, generation) && !has_node(patch, generation + 1);
}

void DynamicGraph::add_node(int patch, int generation) {
    auto& g = generations_[static_cast<std::size_t>(patch)];
    const auto it = std::lower_bound(g.begin(), g.end(), generation);
    if (it != g.end() && *it == generation) return;  // set union: already present
    // The new node is a leaf unless its child generation already exists, and
    // its parent generation (if present) stops being a leaf.
    const bool child_present = std::binary_search(g.begin(), g.end(), generation + 1);
    const bool parent_present =
        generation > 0 && std::binary_search(g.begin(), g.end(), generation - 1);
    g.insert(it, generation);
    ++n_nodes_;
    if (!child_present) ++leaf_count_;
    if (parent_present) --leaf_count_;
}

void DynamicGraph::on_mixing(int x, int y, bool occupied_x, bool occupied_y) {
    if (!occupied_x && !occupied_y) return;
    // Snapshot leaves first: growth must not feed on nodes added by this event.
    std::vector<int> lx, ly;
    for (const int g : generations_[static_cast<std::size_t>(x)])
        if (!has_node(x, g + 1)) lx.push_back(g);
    for (const int g : generations_[static_cast<std::size_t>(y)])
        if (!has_node(y, g + 1)) ly.push_back(g);
    for (const int g : lx) {
        arcs_.push_back({{x, g}, {x, g + 1}});
        arcs_.push_back({{x, g}, {y, g + 1}});
        add_node(x, g + 1);
        add_node(y, g + 1);
    }
    for (const int g : ly) {
        arcs_.push_back({{y, g}, {y, g + 1}});
        arcs_.push_back({{y, g}, {x, g + 1}});
        add_node(y, g + 1);
        add_node(x, g + 1);
    }
}

std::vector<DynamicGraph::Node> DynamicGraph::leaves() const {
    std::vector<Node> out;
    out.reserve(static_cast<std::size_t>(leaf_count_));
    for (std::size_t p = 0; p < generations_.size(); ++p)
        for (const int g : generations_[p])
            if (!has_node(static_cast<int>(p), g + 1)) out.push_back({static_cast<int>(p), g});
    return out;
}

int DynamicGraph::leaf_patch_count() const noexcept {
    // A patch's maximal generation is always a leaf, so any patch with a node
    // carries a leaf.
    int n = 0;
    for (const auto& g : generations_) n += !g.empty();
    return n;
}

int DynamicGraph::min_leaf_generation(int patch) const noexcept {
    const auto& gens = generations_[static_cast<std::size_t>(patch)];
    for (const int g : gens)
        if (!has_node(patch, g + 1)) return g;
    return -1;
}

bool DynamicGraph::is_binary_tree() const {
    const auto key = [](const Node& n) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n.first)) << 32) |
               static_cast<std::uint32_t>(n.second);
    };
    std::unordered_map<std::uint64_t, int> in_deg, out_deg;
    for (const auto& [parent, child] : arcs_) {
        ++out_deg[key(parent)];
        ++in_deg[key(child)];
    }
    const std::uint64_t root_key = key({root_, 0});
    if (in_deg.count(root_key)) return false;
    long long checked_nodes = 0;
    for (std::size_t p = 0; p < generations_.size(); ++p) {
        for (const int g : generations_[p]) {
            const Node node{static_cast<int>(p), g};
            const std::uint64_t k = key(node);
            ++checked_nodes;
            if (k != root_key && (!in_deg.count(k) || in_deg.at(k) != 1)) return false;
            const int od = out_deg.count(k) ? out_deg.at(k) : 0;
            if (od != 0 && od != 2) return false;
        }
    }
    // Generations strictly increase along arcs, so no cycles: in-degree
    // conditions alone make this a tree rooted at (root, 0).
    return checked_nodes == n_nodes_;
}

StructureReport check_structure(const DynamicGraph& h, const Configuration& c, double mu,
                                bool pre_collision, double tol) {
    StructureReport r;
    const int occ = n_occupied(c);
    if (occ != h.leaf_patch_count()) {
        r.leaf_count_ok = false;
        r.violations.push_back("occupied patches " + std::to_string(occ) +
                               " != leaf patches " + std::to_string(h.leaf_patch_count()));
    }
    if (pre_collision) {
        if (occ != h.leaf_count()) {
            r.leaf_count_ok = false;
            r.violations.push_back("occupied patches " + std::to_string(occ) +
                                   " != leaves " + std::to_string(h.leaf_count()));
        }
        if (!h.is_binary_tree()) {
            r.tree_ok = false;
            r.violations.push_back("not an oriented binary tree");
        }
        for (const auto& [patch, gen] : h.leaves()) {
            const double bound = std::pow(1.0 - mu, gen) + tol;
            const double v = c[static_cast<std::size_t>(patch)];
            if (v > bound) {
                r.leaf_bound_ok = false;
                r.violations.push_back("leaf (" + std::to_string(patch) + "," +
                                       std::to_string(gen) + ") density " + std::to_string(v) +
                                       " exceeds (1-mu)^" + std::to_string(gen));
            }
        }
    }
    return r;
}

}  // namespace allee
