#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "lerwlab/nonintersecting.hpp"
#include "lerwlab/stats.hpp"
#include "oracles.hpp"

using namespace lerwlab;

namespace {

// O(len^2) oracle for the global cut indices of a truncated two-sided pair.
template <int D>
std::vector<std::uint32_t> brute_global_cuts(const Path<D>& backward, const Path<D>& forward) {
    std::vector<std::uint32_t> out;
    for (std::size_t j = 0; j < forward.size(); ++j) {
        bool cut = true;
        for (std::size_t a = 0; a < backward.size() && cut; ++a)
            for (std::size_t b = j + 1; b < forward.size(); ++b)
                if (backward[a] == forward[b]) {
                    cut = false;
                    break;
                }
        for (std::size_t a = 0; a <= j && cut; ++a)
            for (std::size_t b = j + 1; b < forward.size(); ++b)
                if (forward[a] == forward[b]) {
                    cut = false;
                    break;
                }
        if (cut) out.push_back(std::uint32_t(j));
    }
    return out;
}

}  // namespace

TEST_CASE("radius-1 acceptance probability is 5/6 in 3d") {
    // exact enumeration over the 36 step pairs: the second walk's first step
    // must differ from the first walk's
    int accept = 0;
    for (int d1 = 0; d1 < 6; ++d1)
        for (int d2 = 0; d2 < 6; ++d2) {
            Point<3> u = origin<3>().neighbor(d1), v = origin<3>().neighbor(d2);
            Path<3> w1{origin<3>(), u}, w2{origin<3>(), v};
            if (pair_nonintersecting(w1, w2)) ++accept;
        }
    REQUIRE(accept == 30);

    PairSampler<3> sampler;
    RngStream rng(1001, 1);
    const int trials = 120000;
    int acc = 0;
    for (int i = 0; i < trials; ++i) acc += sampler.attempt(1.0, rng, nullptr, nullptr) ? 1 : 0;
    double p = double(acc) / trials;
    // 5/6 within 4 binomial sigmas
    double sigma = std::sqrt((5.0 / 6.0) * (1.0 / 6.0) / trials);
    INFO("empirical " << p);
    REQUIRE(std::fabs(p - 5.0 / 6.0) < 4 * sigma);
}

TEST_CASE("accepted pairs satisfy the non-intersection predicate") {
    PairSampler<2> sampler;
    RngStream rng(1001, 2);
    for (int i = 0; i < 60; ++i) {
        WalkPairSample<2> s = sampler.sample_conditioned(8.0, rng);
        REQUIRE(s.accepted);
        REQUIRE(s.attempts >= 1);
        REQUIRE(pair_nonintersecting(s.walk1, s.walk2));
        REQUIRE_FALSE(Ball<2>::centered(8.0).contains(s.walk1.back()));
        REQUIRE_FALSE(Ball<2>::centered(8.0).contains(s.walk2.back()));
    }
}

TEST_CASE("attempt budget exhaustion is an error, never a silent skip") {
    PairSampler<2> sampler;
    RngStream rng(1001, 3);
    REQUIRE_THROWS_AS(sampler.sample_conditioned(24.0, rng, 1), AttemptsExhausted);
}

TEST_CASE("2d non-intersection probability falls with exponent near -5/4") {
    PairSampler<2> sampler;
    std::vector<double> ln, lp;
    for (double n : {8.0, 16.0, 32.0, 64.0, 128.0}) {
        RngStream rng(4242, std::uint64_t(n) * 13 + 2);
        const int trials = 60000;
        std::int64_t acc = 0;
        for (int i = 0; i < trials; ++i) acc += sampler.attempt(n, rng, nullptr, nullptr) ? 1 : 0;
        ln.push_back(std::log(n));
        lp.push_back(std::log(double(acc) / trials));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = double(ln.size());
    for (std::size_t i = 0; i < ln.size(); ++i) {
        sx += ln[i];
        sy += lp[i];
        sxx += ln[i] * ln[i];
        sxy += ln[i] * lp[i];
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    INFO("2d slope " << slope);
    REQUIRE(slope > -1.35);
    REQUIRE(slope < -1.15);
}

TEST_CASE("3d non-intersection exponent lies in (-1, -1/2)") {
    PairSampler<3> sampler;
    std::vector<double> ln, lp;
    for (double n : {8.0, 16.0, 32.0, 64.0, 128.0}) {
        RngStream rng(4242, std::uint64_t(n) * 17 + 3);
        const int trials = 60000;
        std::int64_t acc = 0;
        for (int i = 0; i < trials; ++i) acc += sampler.attempt(n, rng, nullptr, nullptr) ? 1 : 0;
        ln.push_back(std::log(n));
        lp.push_back(std::log(double(acc) / trials));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = double(ln.size());
    for (std::size_t i = 0; i < ln.size(); ++i) {
        sx += ln[i];
        sy += lp[i];
        sxx += ln[i] * ln[i];
        sxy += ln[i] * lp[i];
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    INFO("3d slope " << slope);
    REQUIRE(slope > -1.0);
    REQUIRE(slope < -0.5);
}

TEST_CASE("acceptance rates are monotone non-increasing beyond noise") {
    // pooled one-sided two-proportion test at p > 0.001
    PairSampler<2> sampler;
    std::vector<std::int64_t> accepts;
    const int trials = 40000;
    for (double n : {8.0, 16.0, 32.0, 64.0}) {
        RngStream rng(777, std::uint64_t(n));
        std::int64_t acc = 0;
        for (int i = 0; i < trials; ++i) acc += sampler.attempt(n, rng, nullptr, nullptr) ? 1 : 0;
        accepts.push_back(acc);
    }
    for (std::size_t i = 1; i < accepts.size(); ++i) {
        double p_violation =
            greater_proportion_pvalue(accepts[i], trials, accepts[i - 1], trials);
        // a significant INCREASE would refute monotonicity
        REQUIRE(p_violation > 0.001);
    }
}

TEST_CASE("submultiplicativity-style ratio band across the grid") {
    PairSampler<2> sampler;
    std::vector<double> ns{8.0, 16.0, 32.0, 64.0};
    std::vector<double> probs;
    for (double n : ns) {
        RngStream rng(77121, std::uint64_t(n));
        const int trials = 60000;
        std::int64_t acc = 0;
        for (int i = 0; i < trials; ++i) acc += sampler.attempt(n, rng, nullptr, nullptr) ? 1 : 0;
        probs.push_back(double(acc) / trials);
    }
    // sigma-hat from endpoints
    double sigma = -std::log(probs.back() / probs.front()) / std::log(ns.back() / ns.front());
    double lo = 1e18, hi = -1e18;
    for (std::size_t i = 0; i < ns.size(); ++i)
        for (std::size_t j = i + 1; j < ns.size(); ++j) {
            double ratio = probs[j] / (probs[i] * std::pow(ns[j] / ns[i], -sigma));
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    INFO("ratio band [" << lo << ", " << hi << "]");
    REQUIRE(hi / lo < 4.0);
}

TEST_CASE("index 0 is always a global cut index; oracle agreement") {
    RngStream rng(1212, 1);
    for (int i = 0; i < 40; ++i) {
        TwoSidedSurrogate<2> s = sample_two_sided<2>(12.0, rng);
        REQUIRE_FALSE(s.global_cut_indices.empty());
        REQUIRE(s.global_cut_indices.front() == 0);
        REQUIRE(s.global_cut_indices == brute_global_cuts(s.backward, s.forward));
    }
}

TEST_CASE("length-1 halves report indices 0 and 1") {
    Path<3> backward{origin<3>(), Point<3>{{-1, 0, 0}}};
    Path<3> forward{origin<3>(), Point<3>{{1, 0, 0}}};
    auto cuts = global_cut_indices(backward, forward);
    REQUIRE(cuts == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("global cut indices at radius 32 equal the brute-force oracle") {
    RngStream rng(1212, 2);
    for (int i = 0; i < 1000; ++i) {
        TwoSidedSurrogate<3> s = sample_two_sided<3>(32.0, rng);
        REQUIRE(s.global_cut_indices == brute_global_cuts(s.backward, s.forward));
    }
}

TEST_CASE("every reported global cut splits the two-sided trace") {
    RngStream rng(1212, 3);
    for (int i = 0; i < 30; ++i) {
        TwoSidedSurrogate<2> s = sample_two_sided<2>(16.0, rng);
        for (std::uint32_t j : s.global_cut_indices) {
            PointSet past(s.backward.size() * 2 + s.forward.size() * 2);
            for (std::size_t a = 0; a < s.backward.size(); ++a) past.insert(s.backward.packed(a), 0);
            for (std::size_t a = 0; a <= j; ++a) past.insert(s.forward.packed(a), 0);
            for (std::size_t b = j + 1; b < s.forward.size(); ++b)
                REQUIRE_FALSE(past.contains(s.forward.packed(b)));
        }
    }
}

TEST_CASE("separation indicator on synthetic axis walks") {
    auto straight = [](int dir, int len) {
        Path<3> p(origin<3>());
        Point<3> cur = origin<3>();
        for (int i = 0; i < len; ++i) {
            cur = cur.neighbor(dir);
            p.push_back(cur);
        }
        return p;
    };
    WalkPairSample<3> s;
    s.radius = 40.0;
    s.walk1 = straight(1, 40);  // +x
    s.walk2 = straight(0, 40);  // -x
    REQUIRE(separation_indicator(s, 16.0));

    s.walk1 = straight(3, 40);  // +y: leaves B(3l/2) outside the half-space
    REQUIRE_FALSE(separation_indicator(s, 16.0));

    s.walk1 = straight(1, 40);
    REQUIRE_THROWS_AS(separation_indicator(s, 32.0), std::invalid_argument);
}

TEST_CASE("conditioned pairs separate with positive frequency") {
    // Monte Carlo lower bound for the separation constant at l = 8. The
    // frozen threshold comes from a long pilot run of this estimator
    // (P(Sep|A) is near 4e-3 at this scale); the test checks positivity
    // and the order of magnitude, not the unknowable constant.
    PairSampler<3> sampler;
    RngStream rng(1212, 4);
    int sep = 0;
    const int samples = 3000;
    for (int i = 0; i < samples; ++i) {
        WalkPairSample<3> s = sampler.sample_conditioned(16.0, rng);
        sep += separation_indicator(s, 8.0) ? 1 : 0;
    }
    INFO("separation count " << sep << " of " << samples);
    REQUIRE(sep >= 3);
}

TEST_CASE("piece lengths: T_0 gives the empty loop erasure") {
    RngStream rng(1212, 5);
    TwoSidedSurrogate<2> s = sample_two_sided<2>(8.0, rng);
    auto lengths = lerw_piece_lengths(s, 0);
    REQUIRE(lengths.size() == 1);
    REQUIRE(lengths[0] == 0);
}

TEST_CASE("piece erasure freezes at genuine cut indices") {
    // |LE(forward[0, T_n])| equals the sum of the per-piece loop-erasure
    // lengths: the erasure never reaches back across a cut.
    RngStream rng(1212, 6);
    for (int i = 0; i < 25; ++i) {
        TwoSidedSurrogate<2> s = sample_two_sided<2>(24.0, rng);
        std::vector<std::uint32_t> genuine;
        for (std::uint32_t j : s.global_cut_indices)
            if (j < std::uint32_t(s.forward.steps())) genuine.push_back(j);
        if (genuine.size() < 3) continue;
        int last = int(genuine.size()) - 1;
        auto lengths = lerw_piece_lengths(s, last);
        REQUIRE(int(lengths.size()) == last + 1);
        std::int64_t total = 0;
        for (std::size_t k = 1; k < genuine.size(); ++k) {
            Path<2> piece = s.forward.subpath(genuine[k - 1], genuine[k]);
            total += loop_erase(piece).steps();
            REQUIRE(lengths[k] == total);
        }
    }
}

TEST_CASE("2d arithmetic consistency of the exponent algebra") {
    // (2 - sigma_2) * alpha_l(2) = (3/4) * (5/3) = 5/4
    REQUIRE((2.0 - 5.0 / 4.0) * (5.0 / 3.0) == Catch::Approx(5.0 / 4.0).epsilon(1e-12));
}
