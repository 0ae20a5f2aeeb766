#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lerwlab/errors.hpp"
#include "lerwlab/hash_table.hpp"
#include "lerwlab/loop_erasure.hpp"
#include "lerwlab/stats_types.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

// Escape probabilities of section-6 type: the chance that a fresh walk from
// the origin, up to its exit of B(n), avoids a loop-erased walk (or a piece
// of one). Each LERW realization is reused against several independent test
// walks; the induced dependence is absorbed by a delete-one jackknife over
// realizations.

// Annulus segment eta^2_{m,n}: lambda[s, t] with t the first index outside
// B(n) and s the last index at or before t inside B(m).
template <int D>
Path<D> extract_annulus_segment(const Path<D>& lerw, double m, double n) {
    if (m > n) throw std::invalid_argument("extract_annulus_segment: m > n");
    Ball<D> inner = Ball<D>::centered(m);
    Ball<D> outer = Ball<D>::centered(n);
    std::size_t t = lerw.size();
    for (std::size_t j = 0; j < lerw.size(); ++j) {
        if (!outer.contains(lerw[j])) {
            t = j;
            break;
        }
    }
    if (t == lerw.size()) throw NoCrossing("extract_annulus_segment: path never leaves B(n)");
    std::size_t s = t;
    bool found = false;
    for (std::size_t j = t + 1; j-- > 0;) {
        if (inner.contains(lerw[j])) {
            s = j;
            found = true;
            break;
        }
    }
    if (!found) throw NoCrossing("extract_annulus_segment: path never meets B(m)");
    return lerw.subpath(s, t);
}

namespace detail {

// Walk from the origin to its exit of B(n); false as soon as a point with
// index >= 1 lands on the obstacle set.
template <int D>
bool walk_escapes(const Ball<D>& ball, const PointSet& obstacle, RngStream& rng,
                  std::int64_t max_steps) {
    WalkToExit<D> w;
    w.reset(ball.center, ball);
    std::int64_t taken = 0;
    while (!w.exited()) {
        if (taken++ >= max_steps) throw MaxStepsExceeded("escape walk: step budget exceeded");
        if (obstacle.contains(pack<D>(w.step(rng)))) return false;
    }
    return true;
}

inline EstimateRecord jackknife_record(double n, const std::vector<double>& cluster_means,
                                       std::int64_t per_cluster) {
    EstimateRecord r;
    r.n = n;
    std::size_t s = cluster_means.size();
    double sum = 0;
    for (double v : cluster_means) sum += v;
    r.mean = sum / double(s);
    double ss = 0;
    for (double v : cluster_means) {
        // delete-one mean: (sum - v) / (s - 1); deviation from full mean
        double d = (sum - v) / double(s - 1) - r.mean;
        ss += d * d;
    }
    r.stderr_ = std::sqrt(ss * double(s - 1) / double(s));
    r.count = std::int64_t(s) * per_cluster;
    return r;
}

}  // namespace detail

template <int D>
class EscapeEstimator {
public:
    explicit EscapeEstimator(int walks_per_lerw = 16) : walks_per_lerw_(walks_per_lerw) {}

    int walks_per_lerw() const { return walks_per_lerw_; }

    // Es(n): obstacle is the whole loop-erasure LE(S[0, xi_n]), origin and
    // exit point included; the test walk is checked from its first step on.
    EstimateRecord estimate_es(double n, int lerw_samples, RngStream& rng) {
        return run(n, lerw_samples, rng, [&](RngStream& r) {
            const Path<D>& lerw = walker_.sample_to_exit(Ball<D>::centered(n), r);
            load_obstacle(lerw, 0, lerw.size());
        });
    }

    // Es(m, n): obstacle is the annulus segment of the same LERW.
    EstimateRecord estimate_es_annulus(double m, double n, int lerw_samples, RngStream& rng) {
        if (m > n) throw std::invalid_argument("estimate_es_annulus: m > n");
        return run(n, lerw_samples, rng, [&](RngStream& r) {
            const Path<D>& lerw = walker_.sample_to_exit(Ball<D>::centered(n), r);
            Path<D> seg = extract_annulus_segment(lerw, m, n);
            load_obstacle(seg, 0, seg.size());
        });
    }

    // Es_diamond(n): the infinite-LERW obstacle is approximated by the
    // loop-erasure of a walk run to radius R*n, truncated at its first exit
    // of B(n). R defaults to 8; sensitivity to R is an experiment knob.
    EstimateRecord estimate_es_diamond(double n, int lerw_samples, RngStream& rng,
                                       double surrogate_factor = 8.0) {
        if (surrogate_factor < 1.0)
            throw std::invalid_argument("estimate_es_diamond: surrogate factor < 1");
        Ball<D> inner = Ball<D>::centered(n);
        return run(n, lerw_samples, rng, [&, inner](RngStream& r) {
            const Path<D>& lerw = walker_.sample_to_exit(Ball<D>::centered(surrogate_factor * n), r);
            std::size_t t = 0;
            while (t < lerw.size() && inner.contains(lerw[t])) ++t;
            load_obstacle(lerw, 0, t + 1);  // include the first point outside B(n)
        });
    }

private:
    template <class MakeObstacle>
    EstimateRecord run(double n, int lerw_samples, RngStream& rng, MakeObstacle&& make) {
        if (n < 1.0 || lerw_samples < 1)
            throw std::invalid_argument("escape estimate: need n >= 1 and samples >= 1");
        Ball<D> ball = Ball<D>::centered(n);
        std::int64_t max_steps = default_max_steps(n, D);
        std::vector<double> cluster_means;
        cluster_means.reserve(std::size_t(lerw_samples));
        for (int s = 0; s < lerw_samples; ++s) {
            make(rng);
            int escaped = 0;
            for (int w = 0; w < walks_per_lerw_; ++w)
                escaped += detail::walk_escapes<D>(ball, obstacle_, rng, max_steps) ? 1 : 0;
            cluster_means.push_back(double(escaped) / double(walks_per_lerw_));
        }
        return detail::jackknife_record(n, cluster_means, walks_per_lerw_);
    }

    void load_obstacle(const Path<D>& path, std::size_t first, std::size_t end) {
        obstacle_.reserve((end - first) * 2);
        for (std::size_t i = first; i < end && i < path.size(); ++i)
            obstacle_.insert(path.packed(i), 0);
    }

    LoopErasedWalker<D> walker_;
    PointSet obstacle_{1024};
    int walks_per_lerw_;
};

// Ratio of Lemma-useful type: sum_{j=1..n} j*Es(j) / (n^2 * Es(n)), with
// Es log-log interpolated between the measured grid points.
inline double weighted_sum_check(double n, const EstimateSeries& series) {
    const auto& rec = series.records;
    if (rec.size() < 2 || rec.front().n > 1.0 || rec.back().n < n)
        throw InsufficientGrid("weighted_sum_check: grid must cover [1, n]");
    for (const auto& r : rec)
        if (r.mean <= 0.0) throw InsufficientGrid("weighted_sum_check: nonpositive estimate");

    auto es_at = [&](double j) {
        std::size_t hi = 1;
        while (hi + 1 < rec.size() && rec[hi].n < j) ++hi;
        double x0 = std::log(rec[hi - 1].n), x1 = std::log(rec[hi].n);
        double y0 = std::log(rec[hi - 1].mean), y1 = std::log(rec[hi].mean);
        double x = std::log(j);
        return std::exp(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
    };

    double sum = 0.0;
    for (double j = 1.0; j <= n + 0.5; j += 1.0) sum += j * es_at(j);
    return sum / (n * n * es_at(n));
}

}  // namespace lerwlab
