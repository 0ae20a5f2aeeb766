#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lerwlab/errors.hpp"
#include "lerwlab/rng.hpp"
#include "lerwlab/stats_types.hpp"

namespace lerwlab {

// ---------------------------------------------------------------------------
// Small numerics: regularized incomplete gamma (for chi-square p-values),
// Wilson score intervals, and the normal CDF.

namespace detail {

inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum;
    for (int k = 1; k < 2000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 2000; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// P(a, x): regularized lower incomplete gamma.
inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

// Upper tail of a chi-square distribution with `dof` degrees of freedom.
inline double chi_square_pvalue(double stat, int dof) {
    if (stat <= 0.0) return 1.0;
    if (stat < double(dof) + 1.0) return 1.0 - detail::gamma_p_series(dof / 2.0, stat / 2.0);
    return detail::gamma_q_contfrac(dof / 2.0, stat / 2.0);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::int64_t successes, std::int64_t trials,
                                                 double z = 1.96) {
    if (trials <= 0) return {0.0, 1.0};
    double p = double(successes) / double(trials);
    double n = double(trials);
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// One-sided two-proportion z-test p-value for H1: p1 > p2.
inline double greater_proportion_pvalue(std::int64_t k1, std::int64_t n1, std::int64_t k2,
                                        std::int64_t n2) {
    double p1 = double(k1) / double(n1), p2 = double(k2) / double(n2);
    double pool = double(k1 + k2) / double(n1 + n2);
    double se = std::sqrt(pool * (1.0 - pool) * (1.0 / double(n1) + 1.0 / double(n2)));
    if (se == 0.0) return p1 > p2 ? 0.0 : 1.0;
    return 1.0 - norm_cdf((p1 - p2) / se);
}

// ---------------------------------------------------------------------------
// Exponent fits on log-log series.

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double r_squared = 0.0;
};

namespace detail {

struct OlsLine {
    double slope, intercept, r_squared;
};

inline OlsLine ols(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t k = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    double n = double(k);
    double vx = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / vx;
    double intercept = (sy - slope * sx) / n;
    double vy = n * syy - sy * sy;
    double r2 = vy == 0.0 ? 1.0 : (n * sxy - sx * sy) * (n * sxy - sx * sy) / (vx * vy);
    return {slope, intercept, r2};
}

inline double normal_variate(RngStream& rng) {
    // Box-Muller; one variate per call is plenty for bootstrap use.
    double u1 = rng.next_unit(), u2 = rng.next_unit();
    while (u1 <= 0.0) u1 = rng.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace detail

inline void check_fit_preconditions(const EstimateSeries& series) {
    if (series.size() < 4) throw InsufficientSpan("fit_exponent: need at least 4 records");
    double lo = series.records.front().n, hi = series.records.back().n;
    if (hi < 4.0 * lo) throw InsufficientSpan("fit_exponent: grid must span at least 2 octaves");
    for (const auto& r : series.records)
        if (r.mean <= 0.0) throw InsufficientSpan("fit_exponent: nonpositive mean");
}

// OLS of log(mean) on log(n) with a parametric bootstrap over the per-n
// means: each resample perturbs the means by their standard errors (on log
// scale via the delta method) and refits; the CI is the 2.5/97.5 percentile
// band. Exactly log-linear input with zero stderr collapses the CI onto the
// point estimate.
inline ExponentFit fit_exponent(const EstimateSeries& series, RngStream rng,
                                int bootstrap = 1000) {
    check_fit_preconditions(series);
    std::vector<double> x, y, rel;
    for (const auto& r : series.records) {
        x.push_back(std::log(r.n));
        y.push_back(std::log(r.mean));
        rel.push_back(r.stderr_ / r.mean);
    }
    detail::OlsLine line = detail::ols(x, y);
    ExponentFit fit;
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;

    std::vector<double> slopes;
    slopes.reserve(std::size_t(bootstrap));
    std::vector<double> yb(y.size());
    for (int b = 0; b < bootstrap; ++b) {
        for (std::size_t i = 0; i < y.size(); ++i)
            yb[i] = y[i] + rel[i] * detail::normal_variate(rng);
        slopes.push_back(detail::ols(x, yb).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    auto pct = [&](double q) {
        double pos = q * double(slopes.size() - 1);
        std::size_t i = std::size_t(pos);
        double frac = pos - double(i);
        return i + 1 < slopes.size() ? slopes[i] * (1 - frac) + slopes[i + 1] * frac : slopes[i];
    };
    fit.ci_low = std::min(pct(0.025), fit.slope);
    fit.ci_high = std::max(pct(0.975), fit.slope);
    return fit;
}

// Nonparametric variant used when raw per-sample values are persisted:
// resample each radius's values with replacement, refit, take percentiles.
inline ExponentFit fit_exponent_raw(const std::vector<double>& grid,
                                    const std::vector<std::vector<double>>& samples,
                                    RngStream rng, int bootstrap = 1000) {
    if (grid.size() != samples.size())
        throw GridMismatch("fit_exponent_raw: grid/sample size mismatch");
    EstimateSeries series;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EstimateRecord r;
        r.n = grid[i];
        double s = 0;
        for (double v : samples[i]) s += v;
        r.count = std::int64_t(samples[i].size());
        r.mean = s / double(r.count);
        double ss = 0;
        for (double v : samples[i]) ss += (v - r.mean) * (v - r.mean);
        r.stderr_ = r.count > 1 ? std::sqrt(ss / double(r.count - 1) / double(r.count)) : 0.0;
        series.push(r);
    }
    check_fit_preconditions(series);

    std::vector<double> x, y;
    for (const auto& r : series.records) {
        x.push_back(std::log(r.n));
        y.push_back(std::log(r.mean));
    }
    detail::OlsLine line = detail::ols(x, y);
    ExponentFit fit;
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;

    std::vector<double> slopes;
    slopes.reserve(std::size_t(bootstrap));
    std::vector<double> yb(y.size());
    for (int b = 0; b < bootstrap; ++b) {
        bool ok = true;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& vals = samples[i];
            double s = 0;
            for (std::size_t j = 0; j < vals.size(); ++j)
                s += vals[std::size_t(rng.next_below(vals.size()))];
            double m = s / double(vals.size());
            if (m <= 0.0) {
                ok = false;
                break;
            }
            yb[i] = std::log(m);
        }
        if (ok) slopes.push_back(detail::ols(x, yb).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    auto pct = [&](double q) {
        double pos = q * double(slopes.size() - 1);
        std::size_t i = std::size_t(pos);
        double frac = pos - double(i);
        return i + 1 < slopes.size() ? slopes[i] * (1 - frac) + slopes[i + 1] * frac : slopes[i];
    };
    fit.ci_low = std::min(pct(0.025), fit.slope);
    fit.ci_high = std::max(pct(0.975), fit.slope);
    return fit;
}

// ---------------------------------------------------------------------------
// Tail profile of a sample set relative to its empirical mean.

struct TailHistogram {
    double mean = 0.0;
    std::int64_t total = 0;
    std::vector<double> thresholds;
    std::vector<double> upper_tail;  // P(M >= t * mean)
    std::vector<double> lower_tail;  // P(M < mean / t)
    std::vector<std::int64_t> upper_counts;
    std::vector<std::int64_t> lower_counts;
    std::vector<std::pair<double, double>> upper_wilson;  // 95% score intervals
};

inline TailHistogram tail_profile(std::span<const double> samples,
                                  std::vector<double> thresholds) {
    if (samples.size() < 1000)
        throw std::invalid_argument("tail_profile: need at least 10^3 samples");
    std::sort(thresholds.begin(), thresholds.end());
    TailHistogram h;
    h.total = std::int64_t(samples.size());
    double sum = 0;
    for (double v : samples) sum += v;
    h.mean = sum / double(samples.size());
    h.thresholds = thresholds;
    for (double t : thresholds) {
        std::int64_t up = 0, lo = 0;
        double hi_cut = t * h.mean, lo_cut = h.mean / t;
        for (double v : samples) {
            if (v >= hi_cut) ++up;
            if (v < lo_cut) ++lo;
        }
        h.upper_counts.push_back(up);
        h.lower_counts.push_back(lo);
        h.upper_tail.push_back(double(up) / double(h.total));
        h.lower_tail.push_back(double(lo) / double(h.total));
        h.upper_wilson.push_back(wilson_interval(up, h.total));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Band check of Eq.-asymp type: do two series agree up to constants?

// True when max(a/b) / min(a/b) <= band^2 over the aligned grid.
inline bool band_check(const EstimateSeries& a, const EstimateSeries& b, double band) {
    if (a.size() != b.size()) throw GridMismatch("band_check: series lengths differ");
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.records[i].n != b.records[i].n) throw GridMismatch("band_check: n grids differ");
        if (b.records[i].mean == 0.0) throw GridMismatch("band_check: zero denominator");
        double r = a.records[i].mean / b.records[i].mean;
        if (i == 0) {
            lo = hi = r;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    return hi <= band * band * lo;
}

// Ratio spread max(a/b)/min(a/b); the quantity band_check gates on.
inline double band_spread(const EstimateSeries& a, const EstimateSeries& b) {
    if (a.size() != b.size()) throw GridMismatch("band_spread: series lengths differ");
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.records[i].n != b.records[i].n) throw GridMismatch("band_spread: n grids differ");
        double r = a.records[i].mean / b.records[i].mean;
        if (i == 0) {
            lo = hi = r;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    return hi / lo;
}

}  // namespace lerwlab
