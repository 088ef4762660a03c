#include "allee/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace allee {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

Graph::Graph(int n_vertices, std::vector<Edge> edges) : n_(n_vertices) {
    if (n_vertices < 1) fail("graph needs at least one vertex");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto& [u, v] = edges[i];
        if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices)
            fail("edge " + std::to_string(i) + " (" + std::to_string(u) + "," +
                 std::to_string(v) + ") out of vertex range [0," +
                 std::to_string(n_vertices - 1) + "]");
        if (u == v) fail("edge " + std::to_string(i) + " is a self-loop at " + std::to_string(u));
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    const auto dup = std::adjacent_find(edges.begin(), edges.end());
    if (dup != edges.end())
        fail("duplicate edge (" + std::to_string(dup->u) + "," + std::to_string(dup->v) + ")");
    edges_ = std::move(edges);

    adjacency_.assign(static_cast<std::size_t>(n_), {});
    for (const auto& e : edges_) {
        adjacency_[static_cast<std::size_t>(e.u)].push_back(e.v);
        adjacency_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

int Graph::edge_index(int u, int v) const noexcept {
    if (u > v) std::swap(u, v);
    const Edge key{u, v};
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || !(*it == key)) return -1;
    return static_cast<int>(it - edges_.begin());
}

Graph Graph::ring(int n) {
    if (n < 3) fail("ring needs n >= 3, got " + std::to_string(n));
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
    return Graph(n, std::move(edges));
}

Graph Graph::complete(int n) {
    if (n < 2) fail("complete graph needs n >= 2, got " + std::to_string(n));
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.push_back({u, v});
    return Graph(n, std::move(edges));
}

Graph Graph::circulant(int n, int degree) {
    if (n < 3) fail("circulant needs n >= 3, got " + std::to_string(n));
    if (degree == n - 1) return complete(n);
    if (degree < 2 || degree > n - 1)
        fail("circulant degree must be in [2," + std::to_string(n - 1) + "], got " +
             std::to_string(degree));
    if (degree % 2 != 0)
        fail("circulant degree must be even (or n-1 for the complete graph), got " +
             std::to_string(degree));
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * degree / 2);
    // Offsets run to degree/2 < n/2, so i + k and i - k never alias.
    for (int i = 0; i < n; ++i)
        for (int k = 1; k <= degree / 2; ++k) edges.push_back({i, (i + k) % n});
    return Graph(n, std::move(edges));
}

Graph Graph::from_edge_list(int n_vertices, const std::vector<std::pair<int, int>>& rows) {
    std::set<Edge> seen;
    std::vector<Edge> edges;
    edges.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [u, v] = rows[i];
        if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices)
            fail("row " + std::to_string(i) + ": edge (" + std::to_string(u) + "," +
                 std::to_string(v) + ") out of vertex range [0," +
                 std::to_string(n_vertices - 1) + "]");
        if (u == v) fail("row " + std::to_string(i) + ": self-loop at " + std::to_string(u));
        if (u > v) std::swap(u, v);
        if (!seen.insert(Edge{u, v}).second)
            fail("row " + std::to_string(i) + ": duplicate edge (" + std::to_string(u) + "," +
                 std::to_string(v) + ")");
        edges.push_back({u, v});
    }
    return Graph(n_vertices, std::move(edges));
}

Graph Graph::load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open edge list file: " + path);

    int n_vertices = -1;
    std::vector<std::pair<int, int>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        if (n_vertices < 0) {
            std::string tag;
            if (!(fields >> tag)) continue;  // blank/comment line before header
            long long n = 0;
            if (tag != "N" || !(fields >> n) || n < 1)
                fail(path + ":" + std::to_string(line_no) +
                     ": expected header \"N <n_vertices>\"");
            std::string extra;
            if (fields >> extra)
                fail(path + ":" + std::to_string(line_no) + ": trailing tokens after header");
            n_vertices = static_cast<int>(n);
            continue;
        }
        {
            std::istringstream probe(line);
            std::string token;
            if (!(probe >> token)) continue;  // blank/comment line
        }
        long long u = 0, v = 0;
        std::string extra;
        if (!(fields >> u) || !(fields >> v) || (fields >> extra))
            fail(path + ":" + std::to_string(line_no) + ": expected \"u v\"");
        rows.emplace_back(static_cast<int>(u), static_cast<int>(v));
    }
    if (n_vertices < 0) fail(path + ": missing \"N <n_vertices>\" header");
    return from_edge_list(n_vertices, rows);
}

}  // namespace allee
