#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lerwlab/cut_times.hpp"
#include "lerwlab/errors.hpp"
#include "lerwlab/hash_table.hpp"
#include "lerwlab/loop_erasure.hpp"
#include "lerwlab/path.hpp"
#include "lerwlab/walk.hpp"

namespace lerwlab {

// Two independent walks from the origin, both run to their first exit from
// B(radius). `accepted` reports the non-intersection event
//   walk1[0, xi1] and walk2[1, xi2] vertex-disjoint
// (walk2's starting origin is exempt; walk1's is not).
template <int D>
struct WalkPairSample {
    Path<D> walk1;
    Path<D> walk2;
    double radius = 0.0;
    bool accepted = false;
    std::int64_t attempts = 0;  // attempts consumed to produce this sample
};

inline std::int64_t default_max_attempts(double radius) {
    double r = radius < 1.0 ? 1.0 : radius;
    return std::int64_t(1e4 * r * std::sqrt(r)) + 100;
}

// Rejection sampler for the conditioned pair. Attempts grow both walks in
// lockstep, each new point checked against the other walk's site set, so a
// failed attempt costs only as many steps as the pair survives.
template <int D>
class PairSampler {
public:
    // One unconditioned attempt; paths are materialized only on acceptance
    // unless keep_rejected is set.
    bool attempt(double radius, RngStream& rng, Path<D>* out1, Path<D>* out2,
                 bool keep_rejected = false) {
        Ball<D> ball = Ball<D>::centered(radius);
        sites1_.reserve(expected_range<D>(radius) * 2);
        sites2_.reserve(expected_range<D>(radius) * 2);
        w1_.reset(ball.center, ball);
        w2_.reset(ball.center, ball);
        path1_.clear();
        path2_.clear();
        path1_.push_back(ball.center);
        path2_.push_back(ball.center);
        sites1_.insert(pack<D>(ball.center), 0);
        // origin is exempt for walk2

        std::int64_t max_steps = default_max_steps(radius, D);
        bool ok = true;
        while (!w1_.exited() || !w2_.exited()) {
            if (!w1_.exited()) {
                std::uint64_t key = pack<D>(w1_.step(rng));
                if (sites2_.contains(key)) {
                    ok = false;
                    break;
                }
                sites1_.insert(key, 0);
                path1_.push_packed(key);
                if (path1_.steps() > max_steps)
                    throw MaxStepsExceeded("pair attempt: walk1 exceeded step budget");
            }
            if (!w2_.exited()) {
                std::uint64_t key = pack<D>(w2_.step(rng));
                if (sites1_.contains(key)) {
                    ok = false;
                    break;
                }
                sites2_.insert(key, 0);
                path2_.push_packed(key);
                if (path2_.steps() > max_steps)
                    throw MaxStepsExceeded("pair attempt: walk2 exceeded step budget");
            }
        }
        if ((ok || keep_rejected) && out1) *out1 = path1_;
        if ((ok || keep_rejected) && out2) *out2 = path2_;
        return ok;
    }

    // First accepted pair together with the attempt count (for P(A_n)).
    WalkPairSample<D> sample_conditioned(double radius, RngStream& rng,
                                         std::int64_t max_attempts = -1) {
        if (radius < 1.0) throw std::invalid_argument("sample_pair_conditioned: radius < 1");
        if (max_attempts < 0) max_attempts = default_max_attempts(radius);
        WalkPairSample<D> s;
        s.radius = radius;
        for (std::int64_t a = 1; a <= max_attempts; ++a) {
            if (attempt(radius, rng, &s.walk1, &s.walk2)) {
                s.accepted = true;
                s.attempts = a;
                return s;
            }
        }
        throw AttemptsExhausted("sample_pair_conditioned: no acceptance in " +
                                std::to_string(max_attempts) + " attempts at radius " +
                                std::to_string(radius));
    }

private:
    WalkToExit<D> w1_, w2_;
    PointSet sites1_{1024}, sites2_{1024};
    Path<D> path1_, path2_;
};

template <int D>
WalkPairSample<D> sample_pair_conditioned(double radius, RngStream& rng,
                                          std::int64_t max_attempts = -1) {
    PairSampler<D> s;
    return s.sample_conditioned(radius, rng, max_attempts);
}

// Direct re-check of the acceptance predicate by set intersection.
template <int D>
bool pair_nonintersecting(const Path<D>& walk1, const Path<D>& walk2) {
    PointSet set1(walk1.size() * 2);
    for (std::size_t i = 0; i < walk1.size(); ++i) set1.insert(walk1.packed(i), 0);
    for (std::size_t j = 1; j < walk2.size(); ++j)
        if (set1.contains(walk2.packed(j))) return false;
    return true;
}

// Finite-radius surrogate of the two-sided measure: an accepted pair at the
// truncation radius, with walk1 playing the backward half and walk2 the
// forward half. Global cut indices are relative to the forward walk; 0 is
// always present (it restates the acceptance condition).
template <int D>
struct TwoSidedSurrogate {
    Path<D> backward;
    Path<D> forward;
    double truncation_radius = 0.0;
    std::int64_t attempts = 0;
    std::vector<std::uint32_t> global_cut_indices;
};

// Cut indices are extracted by the local cut-time sweep applied to
// reverse(backward) + forward, keeping indices at or past the junction.
// The forward walk's last index is always listed: its future is empty
// within the truncation, so the disjointness condition holds vacuously
// there. Piece statistics skip that boundary index.
template <int D>
std::vector<std::uint32_t> global_cut_indices(const Path<D>& backward, const Path<D>& forward) {
    CutTimeSweep sweep;
    sweep.reset(backward.size() + forward.size());
    for (std::size_t i = backward.size(); i-- > 1;) sweep.add_point(backward.packed(i));
    for (std::size_t i = 0; i < forward.size(); ++i) sweep.add_point(forward.packed(i));
    CutTimes ct = sweep.harvest();
    std::uint32_t offset = std::uint32_t(backward.size() - 1);  // junction index
    std::vector<std::uint32_t> out;
    for (std::uint32_t k : ct.indices)
        if (k >= offset) out.push_back(k - offset);
    out.push_back(std::uint32_t(forward.steps()));
    return out;
}

template <int D>
TwoSidedSurrogate<D> sample_two_sided(double truncation_radius, RngStream& rng,
                                      std::int64_t max_attempts = -1) {
    PairSampler<D> sampler;
    WalkPairSample<D> pair = sampler.sample_conditioned(truncation_radius, rng, max_attempts);
    TwoSidedSurrogate<D> s;
    s.backward = std::move(pair.walk1);
    s.forward = std::move(pair.walk2);
    s.truncation_radius = truncation_radius;
    s.attempts = pair.attempts;
    s.global_cut_indices = global_cut_indices(s.backward, s.forward);
    return s;
}

// Separation event of the conditioned pair at scale l: walk1 up to its exit
// of B(2l) stays in B(3l/2) union { x1 >= 4l/3 }, and walk2 stays in
// B(3l/2) union { x1 <= -4l/3 }.
template <int D>
bool separation_indicator(const WalkPairSample<D>& sample, double l) {
    if (2.0 * l > sample.radius)
        throw std::invalid_argument("separation_indicator: walks were not run to radius 2l");
    Ball<D> inner = Ball<D>::centered(1.5 * l);
    Ball<D> outer = Ball<D>::centered(2.0 * l);
    double half_space = 4.0 * l / 3.0;
    auto side_ok = [&](const Path<D>& w, bool positive) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            Point<D> p = w[i];
            if (!inner.contains(p)) {
                double x1 = double(p[0]);
                if (positive ? (x1 < half_space) : (x1 > -half_space)) return false;
            }
            if (!outer.contains(p)) break;  // reached xi_{2l}; later points don't matter
        }
        return true;
    };
    return side_ok(sample.walk1, true) && side_ok(sample.walk2, false);
}

// Loop-erasure lengths of the forward half up to each global cut index:
// result[k] = |LE(forward[0, T_k])| for k = 0..max_piece (or fewer when the
// truncated sample has fewer cut indices; the caller sees the shortfall).
// The vacuous boundary index at the end of the forward walk is not used:
// the truncation gives no evidence that it is a genuine global cut time.
template <int D>
std::vector<std::int64_t> lerw_piece_lengths(const TwoSidedSurrogate<D>& s, int max_piece) {
    std::vector<std::int64_t> lengths;
    lengths.reserve(std::size_t(max_piece) + 1);
    ErasureState<D> er;
    er.reset(s.forward[0]);
    std::size_t next_cut = 0;
    const auto& cuts = s.global_cut_indices;
    const std::uint32_t boundary = std::uint32_t(s.forward.steps());
    for (std::size_t i = 0; i < s.forward.size() && int(lengths.size()) <= max_piece; ++i) {
        if (i > 0) er.push_unchecked(s.forward.packed(i));
        while (next_cut < cuts.size() && cuts[next_cut] == i) {
            if (cuts[next_cut] < boundary) lengths.push_back(er.simple_path().steps());
            ++next_cut;
            if (int(lengths.size()) > max_piece) break;
        }
    }
    return lengths;  // lengths.size() <= max_piece + 1; shortfall when smaller
}

}  // namespace lerwlab
