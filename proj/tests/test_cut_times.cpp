#include <catch2/catch_amalgamated.hpp>

#include "lerwlab/cut_times.hpp"
#include "oracles.hpp"

using namespace lerwlab;

namespace {
const Point<2> o2{{0, 0}}, e1{{1, 0}};
}

TEST_CASE("every index of a simple path is a cut time") {
    Path<2> p{o2, e1, Point<2>{{2, 0}}, Point<2>{{2, 1}}};
    CutTimes ct = cut_times(p);
    REQUIRE(ct.path_steps == 3);
    REQUIRE(ct.indices == std::vector<std::uint32_t>{0, 1, 2});
}

TEST_CASE("an immediate return erases all cut times") {
    Path<2> p{o2, e1, o2};
    REQUIRE(cut_times(p).indices.empty());
}

TEST_CASE("sweep equals the quadratic brute force on random walks") {
    RngStream rng(808, 1);
    for (int i = 0; i < 3000; ++i) {
        std::int64_t len = 1 + std::int64_t(rng.next_below(500));
        Path<3> w = oracles::random_walk<3>(len, rng);
        REQUIRE(cut_times(w).indices == oracles::brute_cut_times(w));
    }
    RngStream rng2(808, 2);
    for (int i = 0; i < 1500; ++i) {
        std::int64_t len = 1 + std::int64_t(rng2.next_below(500));
        Path<2> w = oracles::random_walk<2>(len, rng2);
        REQUIRE(cut_times(w).indices == oracles::brute_cut_times(w));
    }
}

TEST_CASE("every reported cut splits the walk into disjoint halves") {
    RngStream rng(808, 3);
    for (int i = 0; i < 200; ++i) {
        Path<3> w = oracles::random_walk<3>(300, rng);
        for (std::uint32_t k : cut_times(w).indices) {
            PointSet prefix(w.size() * 2);
            for (std::size_t j = 0; j <= k; ++j) prefix.insert(w.packed(j), 0);
            for (std::size_t j = k + 1; j < w.size(); ++j)
                REQUIRE_FALSE(prefix.contains(w.packed(j)));
        }
    }
}

TEST_CASE("splicing a returning loop never adds cut times in the original range") {
    RngStream rng(808, 4);
    for (int i = 0; i < 300; ++i) {
        Path<2> w = oracles::random_walk<2>(1 + std::int64_t(rng.next_below(120)), rng);
        std::size_t at = std::size_t(rng.next_below(w.size()));
        // splice [p, p+e, p] at position `at`
        Path<2> spliced;
        for (std::size_t j = 0; j <= at; ++j) spliced.push_packed(w.packed(j));
        spliced.push_back(w[at].neighbor(int(rng.next_below(4))));
        for (std::size_t j = at; j < w.size(); ++j) spliced.push_packed(w.packed(j));
        REQUIRE(spliced.unit_steps());

        auto orig = cut_times(w).indices;
        auto out = cut_times(spliced).indices;
        // map spliced indices back to original ones: indices < at unchanged,
        // indices >= at+2 shift down by 2; the loop's own two indices do not
        // correspond to original indices
        std::vector<std::uint32_t> mapped;
        for (std::uint32_t k : out) {
            if (k < at) mapped.push_back(k);
            else if (k >= at + 2) mapped.push_back(k - 2);
        }
        REQUIRE(mapped.size() <= orig.size());
        // and every mapped cut was a cut of the original walk
        for (std::uint32_t k : mapped)
            REQUIRE(std::find(orig.begin(), orig.end(), k) != orig.end());
    }
}

TEST_CASE("K at radius 1 is exactly 1") {
    RngStream rng(808, 5);
    for (int i = 0; i < 20; ++i)
        REQUIRE(count_cut_points_to_exit(Ball<3>::centered(1), rng) == 1);
}

TEST_CASE("streamed count agrees with the materialized sweep") {
    RngStream rng_a(808, 6), rng_b(808, 6);
    CutPointCounter<2> counter;
    for (int i = 0; i < 200; ++i) {
        std::int64_t streamed = counter.count_to_exit(Ball<2>::centered(12), rng_a);
        Path<2> w = sample_srw_to_exit(origin<2>(), Ball<2>::centered(12), rng_b);
        REQUIRE(streamed == std::int64_t(cut_times(w).indices.size()));
    }
}

TEST_CASE("2d cut-point exponent is near 3/4") {
    CutPointCounter<2> counter;
    std::vector<double> ln, lk;
    for (double n : {16.0, 32.0, 64.0, 128.0}) {
        RngStream rng(909, std::uint64_t(n));
        double sum = 0;
        const int samples = 3000;
        for (int i = 0; i < samples; ++i)
            sum += double(counter.count_to_exit(Ball<2>::centered(n), rng));
        ln.push_back(std::log(n));
        lk.push_back(std::log(sum / samples));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double k = double(ln.size());
    for (std::size_t i = 0; i < ln.size(); ++i) {
        sx += ln[i];
        sy += lk[i];
        sxx += ln[i] * ln[i];
        sxy += ln[i] * lk[i];
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    INFO("fitted cut-point slope " << slope);
    REQUIRE(slope > 0.6);
    REQUIRE(slope < 0.9);
}
