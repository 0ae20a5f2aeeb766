#pragma once

#include <cstdint>

#include "lerwlab/errors.hpp"
#include "lerwlab/hash_table.hpp"
#include "lerwlab/path.hpp"
#include "lerwlab/rng.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

// Chronological loop erasure. The walk is folded one step at a time into a
// simple path: a step onto a site already on the current path truncates the
// path back to that site's first arrival; otherwise the step is appended.
//
// The occupancy table maps packed sites to path positions and is never
// erased from. A stored position may be stale after a truncation, so every
// hit is validated against the current path (pos < len and path[pos] still
// equal to the site); positions below the current length are immutable, so
// the check is exact.
template <int D>
class ErasureState {
public:
    ErasureState() : occ_(1024) {}

    void reset(const Point<D>& start, std::size_t expected_sites = 0) {
        if (expected_sites > 0)
            occ_.reserve(expected_sites);
        else
            occ_.clear();
        path_.clear();
        path_.push_back(start);
        occ_.insert(pack<D>(start), 0);
    }

    bool empty() const { return path_.empty(); }

    void push(const Point<D>& next) {
        if (path_.empty()) {
            reset(next);
            return;
        }
        if ((next - path_.back()).norm2() != 1)
            throw NonAdjacentStep("push_step: point is not a unit step from the path tip");
        push_unchecked(pack<D>(next));
    }

    // Hot path used by the samplers; adjacency is guaranteed by the walker.
    void push_unchecked(std::uint64_t key) {
        bool fresh;
        std::uint32_t& pos = occ_.slot(key, fresh);
        if (!fresh && pos < path_.size() && path_.packed(pos) == key) {
            path_.truncate(std::size_t(pos) + 1);
            return;
        }
        pos = std::uint32_t(path_.size());
        path_.push_packed(key);
    }

    const Path<D>& simple_path() const { return path_; }

private:
    Path<D> path_;
    PointTable<std::uint32_t> occ_;
};

// Batch form: LE(path) for a fully materialized walk.
template <int D>
Path<D> loop_erase(const Path<D>& walk) {
    if (walk.empty()) throw std::invalid_argument("loop_erase: empty path");
    ErasureState<D> st;
    st.reset(walk[0]);
    for (std::size_t i = 1; i < walk.size(); ++i) st.push_unchecked(walk.packed(i));
    return st.simple_path();
}

// Streaming sampler: the walk is generated and erased in one pass, so the
// raw trajectory is never stored. Erasure is applied to the whole walk
// including the exit point.
template <int D>
class LoopErasedWalker {
public:
    const Path<D>& sample_to_exit(const Ball<D>& ball, RngStream& rng, std::int64_t max_steps = -1) {
        if (max_steps < 0) max_steps = default_max_steps(ball.radius, D);
        walker_.reset(ball.center, ball);
        state_.reset(ball.center, expected_range<D>(ball.radius));
        std::int64_t taken = 0;
        while (!walker_.exited()) {
            if (taken >= max_steps)
                throw MaxStepsExceeded("lerw_to_exit: no exit within " + std::to_string(max_steps) +
                                       " steps at radius " + std::to_string(ball.radius));
            state_.push_unchecked(pack<D>(walker_.step(rng)));
            ++taken;
        }
        return state_.simple_path();
    }

private:
    WalkToExit<D> walker_;
    ErasureState<D> state_;
};

// One-shot convenience wrapper around LoopErasedWalker.
template <int D>
Path<D> lerw_to_exit(const Ball<D>& ball, RngStream& rng, std::int64_t max_steps = -1) {
    LoopErasedWalker<D> w;
    return w.sample_to_exit(ball, rng, max_steps);
}

}  // namespace lerwlab
