#pragma once

#include <cstdint>
#include <string>

#include "lerwlab/errors.hpp"
#include "lerwlab/path.hpp"
#include "lerwlab/point.hpp"
#include "lerwlab/rng.hpp"

namespace lerwlab {

// Default step budget for walks run to the exit of a ball of radius r.
// Mean exit time scales like r^2 (|S_k|^2 - k is a martingale), so 64 r^2 d
// is generous; hitting it signals a radius/budget mismatch rather than a
// long excursion.
inline std::int64_t default_max_steps(double radius, int dim) {
    double r = radius < 1.0 ? 1.0 : radius;
    return std::int64_t(64.0 * r * r * dim) + 64;
}

// Rough expected number of distinct sites visited before exiting radius r;
// used only to pre-size hash tables.
template <int D>
std::size_t expected_range(double radius) {
    double r = radius < 1.0 ? 1.0 : radius;
    if constexpr (D == 2) {
        return std::size_t(r * r / 2.0) + 16;
    } else {
        return std::size_t(0.7 * r * r) + 16;
    }
}

// Incremental walker: one simple-random-walk step at a time, tracking the
// squared distance to the ball center so the exit test costs no multiplies.
template <int D>
class WalkToExit {
public:
    void reset(const Point<D>& start, const Ball<D>& ball) {
        inside_max_ = ball.inside_max();
        cur_ = start;
        rel_ = start - ball.center;
        norm2_ = rel_.norm2();
        exited_ = norm2_ > inside_max_;
    }

    bool exited() const { return exited_; }
    const Point<D>& position() const { return cur_; }

    // Advances one step and returns the new position. Must not be called
    // after the walk has exited.
    const Point<D>& step(RngStream& rng) {
        int dir = int(rng.next_below(2 * D));
        int axis = dir >> 1;
        std::int32_t delta = (dir & 1) ? 1 : -1;
        norm2_ += 2 * std::int64_t(delta) * rel_[axis] + 1;
        rel_[axis] += delta;
        cur_[axis] += delta;
        exited_ = norm2_ > inside_max_;
        return cur_;
    }

private:
    std::int64_t inside_max_ = -1;
    Point<D> cur_{};
    Point<D> rel_{};
    std::int64_t norm2_ = 0;
    bool exited_ = true;
};

// Simple random walk from `start`, stopped at its first exit from `ball`
// (first index with |z - center| >= radius). The returned path includes the
// exit point; every earlier point lies strictly inside the ball.
template <int D>
Path<D> sample_srw_to_exit(const Point<D>& start, const Ball<D>& ball, RngStream& rng,
                           std::int64_t max_steps = -1) {
    if (!ball.contains(start)) throw std::invalid_argument("sample_srw_to_exit: start not in ball");
    if (max_steps < 0) max_steps = default_max_steps(ball.radius, D);
    Path<D> path(start);
    WalkToExit<D> w;
    w.reset(start, ball);
    std::int64_t taken = 0;
    while (!w.exited()) {
        if (taken >= max_steps)
            throw MaxStepsExceeded("sample_srw_to_exit: no exit within " + std::to_string(max_steps) +
                                   " steps at radius " + std::to_string(ball.radius));
        path.push_back(w.step(rng));
        ++taken;
    }
    return path;
}

// First index j >= 1 with path(j) outside the ball.
template <int D>
std::size_t exit_time(const Path<D>& path, const Ball<D>& ball) {
    for (std::size_t j = 1; j < path.size(); ++j)
        if (!ball.contains(path[j])) return j;
    throw NoExit("exit_time: path never leaves ball of radius " + std::to_string(ball.radius));
}

}  // namespace lerwlab
