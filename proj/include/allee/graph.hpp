#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace allee {

// Undirected edge stored canonically with u < v. Edges are sorted
// lexicographically inside Graph, so an edge index addresses the same Poisson
// clock no matter how the graph was constructed.
struct Edge {
    std::int32_t u = 0;
    std::int32_t v = 0;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Finite simple undirected graph. Immutable after construction; construction
// validates vertex ranges and rejects self-loops and duplicate edges.
class Graph {
public:
    // `edges` in any order/orientation; canonicalized, validated, sorted.
    Graph(int n_vertices, std::vector<Edge> edges);

    static Graph ring(int n);      // cycle C_n, n >= 3
    static Graph complete(int n);  // K_n, n >= 2

    // Circulant: vertex i adjacent to i +- 1, ..., i +- degree/2 (mod n).
    // degree must be even and in [2, n-1], except degree == n-1 which is
    // accepted as the complete graph. circulant(n, 2) == ring(n).
    static Graph circulant(int n, int degree);

    // Rows are (u, v) pairs as read from an external source; row indices are
    // used in error messages (0-based).
    static Graph from_edge_list(int n_vertices, const std::vector<std::pair<int, int>>& rows);

    // Text format: '#' starts a comment, first significant line is
    // "N <n_vertices>", every following significant line is "u v".
    static Graph load_edge_list(const std::string& path);

    int n_vertices() const noexcept { return n_; }
    int n_edges() const noexcept { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Edge& edge(int index) const { return edges_[static_cast<std::size_t>(index)]; }

    // Index of canonical edge {u, v} in the sorted edge list, or -1.
    int edge_index(int u, int v) const noexcept;

    const std::vector<std::int32_t>& neighbors(int v) const {
        return adjacency_[static_cast<std::size_t>(v)];
    }
    int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::int32_t>> adjacency_;
};

}  // namespace allee
