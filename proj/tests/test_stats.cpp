#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lerwlab/stats.hpp"

using namespace lerwlab;

namespace {

EstimateSeries power_law_series(double exponent, double scale = 1.0, double stderr_rel = 0.0) {
    EstimateSeries s;
    for (double n : {16.0, 32.0, 64.0, 128.0, 256.0}) {
        double mean = scale * std::pow(n, exponent);
        s.push(EstimateRecord{n, mean, stderr_rel * mean, 1000});
    }
    return s;
}

}  // namespace

TEST_CASE("exact power law recovers the exponent to machine precision") {
    RngStream rng(1, 1);
    ExponentFit f = fit_exponent(power_law_series(1.25), rng);
    REQUIRE(f.slope == Catch::Approx(1.25).epsilon(1e-12));
    REQUIRE(f.r_squared == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(f.ci_high - f.ci_low < 1e-12);
}

TEST_CASE("constant series fits slope zero") {
    RngStream rng(1, 2);
    ExponentFit f = fit_exponent(power_law_series(0.0, 7.5), rng);
    REQUIRE(f.slope == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("insufficient span or records is an error") {
    RngStream rng(1, 3);
    EstimateSeries s;
    s.push(EstimateRecord{16.0, 10.0, 0.1, 10});
    s.push(EstimateRecord{32.0, 20.0, 0.1, 10});
    s.push(EstimateRecord{64.0, 40.0, 0.1, 10});
    REQUIRE_THROWS_AS(fit_exponent(s, rng), InsufficientSpan);
    EstimateSeries narrow;
    for (double n : {16.0, 20.0, 24.0, 28.0}) narrow.push(EstimateRecord{n, n, 0.0, 10});
    REQUIRE_THROWS_AS(fit_exponent(narrow, rng), InsufficientSpan);
}

TEST_CASE("bootstrap confidence interval covers a known exponent") {
    // 100 synthetic trials with relative noise; nominal 95% percentile CI
    // must cover the true slope in at least 90 of them
    const double truth = 1.3;
    int covered = 0;
    RngStream noise(42, 1);
    for (int trial = 0; trial < 100; ++trial) {
        EstimateSeries s;
        for (double n : {16.0, 32.0, 64.0, 128.0, 256.0}) {
            double rel = 0.02;
            double mean = std::pow(n, truth) *
                          std::exp(rel * lerwlab::detail::normal_variate(noise));
            s.push(EstimateRecord{n, mean, rel * mean, 1000});
        }
        RngStream boot(42, 100 + std::uint64_t(trial));
        ExponentFit f = fit_exponent(s, boot);
        if (f.ci_low <= truth && truth <= f.ci_high) ++covered;
    }
    INFO("covered " << covered << "/100");
    REQUIRE(covered >= 90);
}

TEST_CASE("raw-sample bootstrap fit matches the series fit on clean data") {
    std::vector<double> grid{16, 32, 64, 128};
    std::vector<std::vector<double>> samples;
    for (double n : grid) samples.push_back(std::vector<double>(64, std::pow(n, 0.75)));
    RngStream rng(5, 5);
    ExponentFit f = fit_exponent_raw(grid, samples, rng);
    REQUIRE(f.slope == Catch::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("tail profile of constant samples") {
    std::vector<double> samples(2000, 3.0);
    TailHistogram h = tail_profile(samples, {1.5, 2.0, 4.0});
    for (double u : h.upper_tail) REQUIRE(u == 0.0);
    for (double l : h.lower_tail) REQUIRE(l == 0.0);
    REQUIRE(h.mean == Catch::Approx(3.0));
}

TEST_CASE("tail profile recovers an exponential rate within 10%") {
    // P(X >= t * mean) = exp(-t) for an exponential; the log-tail slope
    // against t is -1
    RngStream rng(6, 6);
    std::vector<double> samples;
    for (int i = 0; i < 400000; ++i) samples.push_back(-std::log(1.0 - rng.next_unit()));
    TailHistogram h = tail_profile(samples, {1.0, 1.5, 2.0, 2.5, 3.0, 3.5});
    // weighted least squares on log upper tail
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
    for (std::size_t i = 0; i < h.thresholds.size(); ++i) {
        if (h.upper_counts[i] == 0) continue;
        double x = h.thresholds[i], y = std::log(h.upper_tail[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        k += 1;
    }
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    INFO("recovered slope " << slope);
    REQUIRE(std::fabs(slope + 1.0) < 0.1);
}

TEST_CASE("tail monotonicity holds by construction") {
    RngStream rng(7, 7);
    std::vector<double> samples;
    for (int i = 0; i < 5000; ++i) samples.push_back(rng.next_unit() * 10.0);
    TailHistogram h = tail_profile(samples, {1.0, 1.5, 2.0, 3.0, 5.0});
    for (std::size_t i = 1; i < h.upper_tail.size(); ++i) {
        REQUIRE(h.upper_tail[i] <= h.upper_tail[i - 1]);
        REQUIRE(h.lower_tail[i] <= h.lower_tail[i - 1]);
    }
}

TEST_CASE("tail profile needs 10^3 samples") {
    std::vector<double> samples(10, 1.0);
    REQUIRE_THROWS_AS(tail_profile(samples, {2.0}), std::invalid_argument);
}

TEST_CASE("band check accepts identical and constant-ratio series") {
    EstimateSeries a = power_law_series(1.1);
    REQUIRE(band_check(a, a, 1.0));
    EstimateSeries b = power_law_series(1.1, 5.0);
    REQUIRE(band_check(a, b, 1.0000001));  // constant ratio passes any band >= 1
    REQUIRE(band_spread(a, b) == Catch::Approx(1.0));
}

TEST_CASE("band check rejects drifting ratios and mismatched grids") {
    EstimateSeries a = power_law_series(1.1);
    EstimateSeries b = power_law_series(1.6);
    REQUIRE_FALSE(band_check(a, b, 1.5));  // ratio drifts by 16^0.5 over the grid
    EstimateSeries c;
    for (double n : {8.0, 32.0, 64.0, 128.0, 256.0}) c.push(EstimateRecord{n, n, 0.0, 1});
    REQUIRE_THROWS_AS(band_check(a, c, 10.0), GridMismatch);
}

TEST_CASE("chi-square p-values against known quantiles") {
    // 95% quantile of chi-square with 3 dof is 7.815
    REQUIRE(chi_square_pvalue(7.815, 3) == Catch::Approx(0.05).margin(2e-4));
    // with 10 dof, the median is about 9.342
    REQUIRE(chi_square_pvalue(9.342, 10) == Catch::Approx(0.5).margin(1e-3));
    REQUIRE(chi_square_pvalue(0.0, 5) == 1.0);
}

TEST_CASE("wilson interval brackets the point estimate") {
    auto [lo, hi] = wilson_interval(20, 1000);
    REQUIRE(lo < 0.02);
    REQUIRE(hi > 0.02);
    REQUIRE(lo > 0.0);
    auto [lo0, hi0] = wilson_interval(0, 1000);
    REQUIRE(lo0 == 0.0);
    REQUIRE(hi0 > 0.0);
}
