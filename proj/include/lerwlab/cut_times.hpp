#pragma once

#include <cstdint>
#include <vector>

#include "lerwlab/hash_table.hpp"
#include "lerwlab/loop_erasure.hpp"
#include "lerwlab/path.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

// Local cut times of a finite walk: k is a cut time when the vertex sets of
// path[0..k] and path[k+1..end] are disjoint. A site visited at times
// t1 < t2 forbids every k in [t1, t2-1]; the forbidden set is the union of
// [first_visit, last_visit-1] over all sites, accumulated in a difference
// array. k ranges over {0, .., len-1}; k = len is vacuous and excluded.
struct CutTimes {
    std::vector<std::uint32_t> indices;  // strictly increasing
    std::size_t path_steps = 0;
};

// Reusable sweep. Feed points in walk order, then harvest.
class CutTimeSweep {
public:
    CutTimeSweep() : spans_(1024) {}

    void reset(std::size_t expected_sites = 0) {
        if (expected_sites > 0)
            spans_.reserve(expected_sites);
        else
            spans_.clear();
        n_points_ = 0;
    }

    void add_point(std::uint64_t key) {
        bool fresh;
        std::uint64_t& span = spans_.slot(key, fresh);
        if (fresh) {
            span = (std::uint64_t(n_points_) << 32) | n_points_;  // first == last
        } else {
            span = (span & 0xFFFFFFFF00000000ull) | n_points_;  // update last
        }
        ++n_points_;
    }

    std::int64_t count() const { return finish(nullptr); }

    CutTimes harvest() const {
        CutTimes ct;
        ct.path_steps = n_points_ == 0 ? 0 : n_points_ - 1;
        finish(&ct.indices);
        return ct;
    }

private:
    std::int64_t finish(std::vector<std::uint32_t>* collect) const {
        if (n_points_ == 0) return 0;
        std::size_t len = n_points_ - 1;  // number of steps
        diff_.assign(n_points_ + 1, 0);
        spans_.for_each([&](std::uint64_t, std::uint64_t span) {
            std::uint32_t first = std::uint32_t(span >> 32);
            std::uint32_t last = std::uint32_t(span);
            if (first < last) {
                ++diff_[first];
                --diff_[last];
            }
        });
        std::int64_t cuts = 0;
        std::int64_t open = 0;
        for (std::size_t k = 0; k < len; ++k) {
            open += diff_[k];
            if (open == 0) {
                ++cuts;
                if (collect) collect->push_back(std::uint32_t(k));
            }
        }
        return cuts;
    }

    PointTable<std::uint64_t> spans_;
    std::uint32_t n_points_ = 0;
    mutable std::vector<std::int32_t> diff_;
};

template <int D>
CutTimes cut_times(const Path<D>& path) {
    if (path.empty()) throw std::invalid_argument("cut_times: empty path");
    CutTimeSweep sweep;
    sweep.reset();
    for (std::size_t i = 0; i < path.size(); ++i) sweep.add_point(path.packed(i));
    return sweep.harvest();
}

// K_n: number of cut times of S[0, xi_n] with k < exit index, for a walk
// from the ball center. Streams the walk, never storing it.
template <int D>
class CutPointCounter {
public:
    std::int64_t count_to_exit(const Ball<D>& ball, RngStream& rng, std::int64_t max_steps = -1) {
        if (max_steps < 0) max_steps = default_max_steps(ball.radius, D);
        walker_.reset(ball.center, ball);
        sweep_.reset(expected_range<D>(ball.radius));
        sweep_.add_point(pack<D>(ball.center));
        std::int64_t taken = 0;
        while (!walker_.exited()) {
            if (taken >= max_steps)
                throw MaxStepsExceeded("count_cut_points_to_exit: no exit within " +
                                       std::to_string(max_steps) + " steps");
            sweep_.add_point(pack<D>(walker_.step(rng)));
            ++taken;
        }
        return sweep_.count();
    }

private:
    WalkToExit<D> walker_;
    CutTimeSweep sweep_;
};

template <int D>
std::int64_t count_cut_points_to_exit(const Ball<D>& ball, RngStream& rng,
                                      std::int64_t max_steps = -1) {
    CutPointCounter<D> c;
    return c.count_to_exit(ball, rng, max_steps);
}

}  // namespace lerwlab
