#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "lerwlab/errors.hpp"
#include "lerwlab/hash_table.hpp"
#include "lerwlab/path.hpp"

namespace lerwlab {

// Graph traced out by a walk: vertices are the visited sites, edges the
// traversed unit steps, deduplicated. Multiple traversals of an edge do not
// change its conductance; the electrical network carries a unit resistor
// per edge.
template <int D>
struct TraceGraph {
    std::vector<std::uint64_t> site_of;       // vertex id -> packed site
    std::vector<std::vector<std::uint32_t>> adj;  // degree <= 2D
    std::size_t edge_count = 0;

    std::size_t vertex_count() const { return site_of.size(); }

    std::int64_t vertex_index(const Point<D>& p) const {
        const std::uint32_t* v = index_.find(pack<D>(p));
        return v ? std::int64_t(*v) : -1;
    }

    static TraceGraph build(const Path<D>& path) {
        if (path.empty()) throw std::invalid_argument("TraceGraph: empty path");
        TraceGraph g;
        g.index_.reserve(path.size() * 2);
        auto vertex = [&](std::uint64_t key) {
            bool fresh;
            std::uint32_t& id = g.index_.slot(key, fresh);
            if (fresh) {
                id = std::uint32_t(g.site_of.size());
                g.site_of.push_back(key);
                g.adj.emplace_back();
            }
            return id;
        };
        std::uint32_t prev = vertex(path.packed(0));
        for (std::size_t i = 1; i < path.size(); ++i) {
            std::uint32_t cur = vertex(path.packed(i));
            bool known = false;
            for (std::uint32_t nb : g.adj[prev])
                if (nb == cur) {
                    known = true;
                    break;
                }
            if (!known) {
                g.adj[prev].push_back(cur);
                g.adj[cur].push_back(prev);
                ++g.edge_count;
            }
            prev = cur;
        }
        return g;
    }

private:
    PointTable<std::uint32_t> index_{1024};
};

// BFS graph distance.
template <int D>
std::int64_t chemical_distance(const TraceGraph<D>& g, std::uint32_t a, std::uint32_t b) {
    if (a >= g.vertex_count() || b >= g.vertex_count())
        throw std::invalid_argument("chemical_distance: vertex out of range");
    if (a == b) return 0;
    std::vector<std::int32_t> dist(g.vertex_count(), -1);
    std::vector<std::uint32_t> frontier{a}, next;
    dist[a] = 0;
    std::int32_t d = 0;
    while (!frontier.empty()) {
        ++d;
        next.clear();
        for (std::uint32_t u : frontier) {
            for (std::uint32_t v : g.adj[u]) {
                if (dist[v] >= 0) continue;
                if (v == b) return d;
                dist[v] = d;
                next.push_back(v);
            }
        }
        frontier.swap(next);
    }
    throw Disconnected("chemical_distance: vertices not connected (corrupted trace graph)");
}

template <int D>
std::int64_t chemical_distance(const TraceGraph<D>& g, const Point<D>& a, const Point<D>& b) {
    std::int64_t ia = g.vertex_index(a), ib = g.vertex_index(b);
    if (ia < 0 || ib < 0) throw std::invalid_argument("chemical_distance: point not in graph");
    return chemical_distance(g, std::uint32_t(ia), std::uint32_t(ib));
}

struct ResistanceResult {
    double value = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// Effective resistance between two vertices: unit current is injected at a
// and extracted at b, the potential is pinned to 0 at b, and the Laplacian
// system is solved by Jacobi-preconditioned conjugate gradients. The
// resistance is the potential at a; the energy of the harmonic minimizer
// f = phi/phi(a) is 1/R, matching the variational definition.
template <int D>
ResistanceResult effective_resistance(const TraceGraph<D>& g, std::uint32_t a, std::uint32_t b,
                                      double tol = 1e-10) {
    std::size_t n = g.vertex_count();
    if (a >= n || b >= n) throw std::invalid_argument("effective_resistance: vertex out of range");
    if (a == b) throw std::invalid_argument("effective_resistance: identical endpoints");

    std::vector<double> phi(n, 0.0), r(n, 0.0), z(n, 0.0), p(n, 0.0), ap(n, 0.0);
    auto mul = [&](const std::vector<double>& x, std::vector<double>& out) {
        // Laplacian with row/column b pinned out.
        for (std::size_t u = 0; u < n; ++u) {
            if (u == b) {
                out[u] = 0.0;
                continue;
            }
            double acc = double(g.adj[u].size()) * x[u];
            for (std::uint32_t v : g.adj[u])
                if (v != b) acc -= x[v];
            out[u] = acc;
        }
    };

    r[a] = 1.0;  // unit current into a (out of the pinned vertex b)
    double rhs_norm = 1.0;
    for (std::size_t u = 0; u < n; ++u) z[u] = (u == b) ? 0.0 : r[u] / double(g.adj[u].size());
    p = z;
    double rz = 0.0;
    for (std::size_t u = 0; u < n; ++u) rz += r[u] * z[u];

    int max_iters = int(10 * n + 200);
    int it = 0;
    double res = 1.0;
    for (; it < max_iters; ++it) {
        mul(p, ap);
        double pap = 0.0;
        for (std::size_t u = 0; u < n; ++u) pap += p[u] * ap[u];
        if (pap <= 0.0) break;
        double alpha = rz / pap;
        double rr = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            phi[u] += alpha * p[u];
            r[u] -= alpha * ap[u];
            rr += r[u] * r[u];
        }
        res = std::sqrt(rr) / rhs_norm;
        if (res <= tol) break;
        double rz_new = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            z[u] = (u == b) ? 0.0 : r[u] / double(g.adj[u].size());
            rz_new += r[u] * z[u];
        }
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t u = 0; u < n; ++u) p[u] = z[u] + beta * p[u];
    }
    if (res > tol)
        throw SolverDiverged("effective_resistance: CG residual " + std::to_string(res) +
                             " above tolerance after " + std::to_string(it) + " iterations");
    ResistanceResult out;
    out.value = phi[a];
    out.residual = res;
    out.iterations = it + 1;
    return out;
}

template <int D>
ResistanceResult effective_resistance(const TraceGraph<D>& g, const Point<D>& a,
                                      const Point<D>& b, double tol = 1e-10) {
    std::int64_t ia = g.vertex_index(a), ib = g.vertex_index(b);
    if (ia < 0 || ib < 0) throw std::invalid_argument("effective_resistance: point not in graph");
    return effective_resistance(g, std::uint32_t(ia), std::uint32_t(ib), tol);
}

}  // namespace lerwlab
