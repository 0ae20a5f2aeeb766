#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "lerwlab/rng.hpp"
#include "lerwlab/stats.hpp"

using namespace lerwlab;

TEST_CASE("identical (seed, stream) replays bit-identically") {
    RngStream a(1, 0), b(1, 0);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids diverge immediately") {
    RngStream a(1, 0), b(1, 1);
    std::vector<std::uint64_t> xa, xb;
    for (int i = 0; i < 64; ++i) {
        xa.push_back(a.next_u64());
        xb.push_back(b.next_u64());
    }
    REQUIRE(xa != xb);
}

TEST_CASE("counter is the stream position") {
    RngStream a(99, 7);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 10; ++i) first.push_back(a.next_u64());
    RngStream b(99, 7);
    b.set_counter(5);
    for (int i = 5; i < 10; ++i) REQUIRE(b.next_u64() == first[std::size_t(i)]);
}

TEST_CASE("first outputs of many streams pass a uniformity chi-square") {
    // 10^3 streams, first output each, 2^8 buckets, accept at p > 0.001
    const int streams = 1000, buckets = 256;
    std::vector<std::int64_t> counts(buckets, 0);
    for (int s = 0; s < streams; ++s) {
        RngStream r(2026, std::uint64_t(s));
        ++counts[std::size_t(r.next_u64() >> 56)];
    }
    double expect = double(streams) / buckets;
    double stat = 0;
    for (std::int64_t c : counts) stat += (double(c) - expect) * (double(c) - expect) / expect;
    double p = chi_square_pvalue(stat, buckets - 1);
    INFO("chi-square stat " << stat << " p " << p);
    REQUIRE(p > 0.001);
}

TEST_CASE("next_below is in range and roughly uniform") {
    RngStream r(3, 3);
    std::vector<std::int64_t> counts(6, 0);
    for (int i = 0; i < 60000; ++i) {
        std::uint64_t v = r.next_below(6);
        REQUIRE(v < 6);
        ++counts[std::size_t(v)];
    }
    double expect = 10000.0, stat = 0;
    for (auto c : counts) stat += (double(c) - expect) * (double(c) - expect) / expect;
    REQUIRE(chi_square_pvalue(stat, 5) > 0.001);
}

TEST_CASE("substream derivation is deterministic and distinct") {
    RngStream parent(11, 22);
    RngStream c1 = parent.substream(1);
    RngStream c1_again = parent.substream(1);
    REQUIRE(c1.next_u64() == c1_again.next_u64());
    RngStream c1b = parent.substream(1);
    RngStream c2 = parent.substream(2);
    bool differ = false;
    for (int i = 0; i < 16; ++i) differ = differ || (c1b.next_u64() != c2.next_u64());
    REQUIRE(differ);
}

TEST_CASE("fnv1a64 matches reference vectors") {
    REQUIRE(fnv1a64("", 0) == 0xcbf29ce484222325ull);
    REQUIRE(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
}
