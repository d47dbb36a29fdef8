#pragma once

// Interval estimates and verdicts for the Monte Carlo checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace bootperc {

inline constexpr double z95 = 1.959963984540054;

struct Proportion {
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    double point = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

inline Proportion wilson(std::int64_t successes, std::int64_t trials, double z = z95) {
    if (trials < 1 || successes < 0 || successes > trials) throw std::invalid_argument("wilson: bad counts");
    const double n = double(trials), ph = double(successes) / n;
    const double z2 = z * z;
    const double centre = (ph + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n));
    Proportion r{successes, trials, ph, std::max(0.0, centre - half), std::min(1.0, centre + half)};
    // Exact endpoints at the extremes, where rounding can leave a sliver.
    if (successes == 0) r.lo = 0.0;
    if (successes == trials) r.hi = 1.0;
    return r;
}

enum class Verdict { pass, inconclusive, fail, vacuous };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::inconclusive: return "INCONCLUSIVE";
        case Verdict::fail: return "FAIL";
        case Verdict::vacuous: return "VACUOUS";
    }
    return "?";
}

// An upper bound claim "x <= bound" checked against an interval for x.
inline Verdict upper_bound_verdict(double lo, double hi, double bound) {
    if (hi <= bound) return Verdict::pass;
    if (lo > bound) return Verdict::fail;
    return Verdict::inconclusive;
}

// log P(Bin(n, 1/2) = k)
inline double log_binom_half(std::int64_t n, std::int64_t k) {
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1) -
           double(n) * std::log(2.0);
}

struct MedianEstimate {
    double median = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

// Sample median with a distribution-free order-statistic interval: the
// widest symmetric pair (x_(j), x_(n+1-j)) whose Bin(n, 1/2) coverage is
// still at least `level`. Infinite entries are allowed and sort last.
inline MedianEstimate median_ci(std::vector<double> xs, double level = 0.95) {
    if (xs.empty()) throw std::invalid_argument("median_ci: empty sample");
    std::sort(xs.begin(), xs.end());
    const auto n = std::int64_t(xs.size());
    MedianEstimate m;
    m.count = xs.size();
    m.median = n % 2 ? xs[std::size_t(n / 2)] : 0.5 * (xs[std::size_t(n / 2 - 1)] + xs[std::size_t(n / 2)]);
    // Coverage of (x_(j), x_(n+1-j)) is 1 - 2 P(Bin <= j-1).
    double tail = 0.0;
    std::int64_t j = 0;
    while (j + 1 <= n / 2) {
        const double next = tail + std::exp(log_binom_half(n, j));
        if (1.0 - 2.0 * next < level) break;
        tail = next;
        ++j;
    }
    if (j == 0) {
        m.lo = -std::numeric_limits<double>::infinity();
        m.hi = std::numeric_limits<double>::infinity();
    } else {
        m.lo = xs[std::size_t(j - 1)];
        m.hi = xs[std::size_t(n - j)];
    }
    return m;
}

inline std::vector<double> ranks(const std::vector<double>& xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal samples");
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

// Joint frequencies of two indicator sequences.
struct PairCounts {
    std::int64_t n = 0;
    std::int64_t e = 0;
    std::int64_t f = 0;
    std::int64_t both = 0;

    void add(bool x, bool y) {
        ++n;
        e += x;
        f += y;
        both += x && y;
    }
};

struct CovarianceEstimate {
    double p_e = 0.0;
    double p_f = 0.0;
    double p_both = 0.0;
    double product = 0.0;
    double diff = 0.0;  // p_both - p_e p_f
    double se = 0.0;
};

// Standard error of p_both - p_e p_f by the delta method on the four-cell
// multinomial; equals sqrt(Var(1_E 1_F - p_f 1_E - p_e 1_F) / n).
inline CovarianceEstimate covariance(const PairCounts& c) {
    if (c.n < 2) throw std::invalid_argument("covariance: need at least two trials");
    CovarianceEstimate r;
    const double n = double(c.n);
    r.p_e = double(c.e) / n;
    r.p_f = double(c.f) / n;
    r.p_both = double(c.both) / n;
    r.product = r.p_e * r.p_f;
    r.diff = r.p_both - r.product;
    // Influence values per cell (E, F) in {0,1}^2.
    const double p11 = r.p_both, p10 = r.p_e - p11, p01 = r.p_f - p11, p00 = 1.0 - p11 - p10 - p01;
    const double v11 = 1 - r.p_f - r.p_e, v10 = -r.p_f, v01 = -r.p_e, v00 = 0.0;
    const double mean = p11 * v11 + p10 * v10 + p01 * v01 + p00 * v00;
    const double var = p11 * v11 * v11 + p10 * v10 * v10 + p01 * v01 * v01 + p00 * v00 * v00 - mean * mean;
    r.se = std::sqrt(std::max(var, 0.0) / n);
    return r;
}

}  // namespace bootperc
