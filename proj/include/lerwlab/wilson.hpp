#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lerwlab/rng.hpp"

namespace lerwlab {

// Small undirected simple connected graphs for the uniform-spanning-tree
// oracle. Vertices are dense integer ids.
struct FiniteGraph {
    std::vector<std::vector<int>> adj;

    int size() const { return int(adj.size()); }

    static FiniteGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
        FiniteGraph g;
        g.adj.assign(std::size_t(n), {});
        for (auto [u, v] : edges) {
            g.adj[std::size_t(u)].push_back(v);
            g.adj[std::size_t(v)].push_back(u);
        }
        g.validate();
        return g;
    }

    static FiniteGraph cycle(int n) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
        return from_edges(n, e);
    }

    static FiniteGraph path(int n) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
        return from_edges(n, e);
    }

    // rows x cols grid; vertex = r * cols + c.
    static FiniteGraph grid(int rows, int cols) {
        std::vector<std::pair<int, int>> e;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                if (c + 1 < cols) e.emplace_back(r * cols + c, r * cols + c + 1);
                if (r + 1 < rows) e.emplace_back(r * cols + c, (r + 1) * cols + c);
            }
        return from_edges(rows * cols, e);
    }

    static FiniteGraph complete(int n) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
        return from_edges(n, e);
    }

    void validate() const {
        int n = size();
        if (n == 0) throw std::invalid_argument("FiniteGraph: empty");
        for (int u = 0; u < n; ++u) {
            std::vector<int> nb = adj[std::size_t(u)];
            std::sort(nb.begin(), nb.end());
            for (std::size_t i = 0; i < nb.size(); ++i) {
                if (nb[i] < 0 || nb[i] >= n || nb[i] == u)
                    throw std::invalid_argument("FiniteGraph: bad edge");
                if (i > 0 && nb[i] == nb[i - 1])
                    throw std::invalid_argument("FiniteGraph: parallel edge");
            }
        }
        // connectivity
        std::vector<char> seen(std::size_t(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int reached = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[std::size_t(u)])
                if (!seen[std::size_t(v)]) {
                    seen[std::size_t(v)] = 1;
                    ++reached;
                    stack.push_back(v);
                }
        }
        if (reached != n) throw std::invalid_argument("FiniteGraph: not connected");
    }
};

struct SpanningTree {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // normalized u < v, sorted
    std::vector<std::vector<int>> adj;

    // canonical identity, usable as a histogram key
    std::string key() const {
        std::string s;
        s.reserve(edges.size() * 8);
        for (auto [u, v] : edges) {
            s += std::to_string(u);
            s += ',';
            s += std::to_string(v);
            s += ';';
        }
        return s;
    }
};

// Loop-erased random walk on a finite graph from `from`, stopped when
// `stop(v)` first holds. Same chronological-erasure step as the lattice
// samplers: a revisit truncates back to the first arrival.
template <class Stop>
std::vector<int> lerw_on_graph(const FiniteGraph& g, int from, Stop&& stop, RngStream& rng) {
    std::vector<int> path{from};
    std::vector<int> pos(std::size_t(g.size()), -1);
    pos[std::size_t(from)] = 0;
    int cur = from;
    while (!stop(cur)) {
        const auto& nb = g.adj[std::size_t(cur)];
        cur = nb[std::size_t(rng.next_below(nb.size()))];
        int p = pos[std::size_t(cur)];
        if (p >= 0 && p < int(path.size()) && path[std::size_t(p)] == cur) {
            for (std::size_t i = std::size_t(p) + 1; i < path.size(); ++i)
                pos[std::size_t(path[i])] = -1;
            path.resize(std::size_t(p) + 1);
        } else {
            pos[std::size_t(cur)] = int(path.size());
            path.push_back(cur);
        }
    }
    return path;
}

inline std::vector<int> lerw_to_vertex(const FiniteGraph& g, int from, int to, RngStream& rng) {
    return lerw_on_graph(g, from, [to](int v) { return v == to; }, rng);
}

// Wilson's algorithm rooted at `root`: stitch loop-erased walks from each
// unvisited vertex to the growing tree. Uniform over spanning trees.
inline SpanningTree wilson_sample(const FiniteGraph& g, int root, RngStream& rng) {
    int n = g.size();
    SpanningTree t;
    t.n = n;
    t.adj.assign(std::size_t(n), {});
    std::vector<char> in_tree(std::size_t(n), 0);
    in_tree[std::size_t(root)] = 1;
    for (int v = 0; v < n; ++v) {
        if (in_tree[std::size_t(v)]) continue;
        std::vector<int> branch =
            lerw_on_graph(g, v, [&](int u) { return bool(in_tree[std::size_t(u)]); }, rng);
        for (std::size_t i = 0; i + 1 < branch.size(); ++i) {
            int a = branch[i], b = branch[i + 1];
            in_tree[std::size_t(a)] = 1;
            t.edges.emplace_back(std::min(a, b), std::max(a, b));
            t.adj[std::size_t(a)].push_back(b);
            t.adj[std::size_t(b)].push_back(a);
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

// The unique tree path between u and v (BFS parent chase).
inline std::vector<int> tree_path(const SpanningTree& t, int u, int v) {
    if (u == v) return {u};
    std::vector<int> parent(std::size_t(t.n), -2);
    std::vector<int> queue{u};
    parent[std::size_t(u)] = -1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        int a = queue[head];
        for (int b : t.adj[std::size_t(a)]) {
            if (parent[std::size_t(b)] != -2) continue;
            parent[std::size_t(b)] = a;
            if (b == v) {
                std::vector<int> rev{v};
                for (int c = a; c != -1; c = parent[std::size_t(c)]) rev.push_back(c);
                std::reverse(rev.begin(), rev.end());
                return rev;
            }
            queue.push_back(b);
        }
    }
    throw std::invalid_argument("tree_path: vertices not connected in tree");
}

// Number of spanning trees by the matrix-tree theorem: determinant of the
// Laplacian minor, computed exactly with fraction-free (Bareiss)
// elimination in 128-bit integers. Intended for the small graphs the
// uniformity and Pemantle checks enumerate (n <= 16).
inline std::int64_t spanning_tree_count(const FiniteGraph& g) {
    int n = g.size();
    if (n > 16) throw std::invalid_argument("spanning_tree_count: graph too large");
    if (n == 1) return 1;
    int m = n - 1;
    std::vector<std::vector<__int128>> a(std::size_t(m), std::vector<__int128>(std::size_t(m), 0));
    for (int u = 0; u < m; ++u) {
        a[std::size_t(u)][std::size_t(u)] = __int128(g.adj[std::size_t(u)].size());
        for (int v : g.adj[std::size_t(u)])
            if (v < m) a[std::size_t(u)][std::size_t(v)] -= 1;
    }
    __int128 prev = 1;
    for (int k = 0; k < m - 1; ++k) {
        if (a[std::size_t(k)][std::size_t(k)] == 0) {
            int swap_row = -1;
            for (int i = k + 1; i < m; ++i)
                if (a[std::size_t(i)][std::size_t(k)] != 0) {
                    swap_row = i;
                    break;
                }
            if (swap_row < 0) return 0;
            std::swap(a[std::size_t(k)], a[std::size_t(swap_row)]);
            for (int j = 0; j < m; ++j) a[std::size_t(k)][std::size_t(j)] = -a[std::size_t(k)][std::size_t(j)];
        }
        for (int i = k + 1; i < m; ++i) {
            for (int j = k + 1; j < m; ++j) {
                a[std::size_t(i)][std::size_t(j)] =
                    (a[std::size_t(i)][std::size_t(j)] * a[std::size_t(k)][std::size_t(k)] -
                     a[std::size_t(i)][std::size_t(k)] * a[std::size_t(k)][std::size_t(j)]) /
                    prev;
            }
            a[std::size_t(i)][std::size_t(k)] = 0;
        }
        prev = a[std::size_t(k)][std::size_t(k)];
    }
    return std::int64_t(a[std::size_t(m - 1)][std::size_t(m - 1)]);
}

// Total-variation distance between the empirical law of the UST path from
// u to v and the empirical law of LERW from u stopped at v (the Pemantle
// identity makes the true laws equal).
inline double pemantle_check(const FiniteGraph& g, int u, int v, int samples, RngStream& rng) {
    auto key_of = [](const std::vector<int>& path) {
        std::string s;
        for (int x : path) {
            s += std::to_string(x);
            s += ',';
        }
        return s;
    };
    std::map<std::string, std::int64_t> ust_counts, lerw_counts;
    for (int i = 0; i < samples; ++i) {
        SpanningTree t = wilson_sample(g, 0, rng);
        ++ust_counts[key_of(tree_path(t, u, v))];
    }
    for (int i = 0; i < samples; ++i) ++lerw_counts[key_of(lerw_to_vertex(g, u, v, rng))];
    double tv = 0.0;
    for (const auto& [k, c] : ust_counts) {
        auto it = lerw_counts.find(k);
        double q = it == lerw_counts.end() ? 0.0 : double(it->second);
        tv += std::abs(double(c) - q);
    }
    for (const auto& [k, c] : lerw_counts)
        if (!ust_counts.count(k)) tv += double(c);
    return tv / (2.0 * double(samples));
}

}  // namespace lerwlab
