#pragma once

// Monte Carlo estimators and checks: cell failure rates and their
// recursions, the critical grid size, percolation time scaling, slab
// speed, Harris correlations and the corner probe.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cells.hpp"
#include "flood.hpp"
#include "grid.hpp"
#include "random.hpp"
#include "rectangles.hpp"
#include "slab.hpp"
#include "stats.hpp"

namespace bootperc {

inline int resolve_threads(int requested) {
    if (requested < 0) throw std::invalid_argument("threads must be >= 0");
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// fn(i) for i in [0, n), results in index order whatever the scheduling.
// The first exception thrown by any worker is rethrown after all join.
template <class F>
auto parallel_map(std::size_t n, int threads, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    const int workers = std::max(1, std::min<int>(resolve_threads(threads), int(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// Stable text for doubles inside experiment ids.
// Shortest decimal that reads back as the same double.
inline std::string id_number(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---------------------------------------------------------------- cells

struct CellTrial {
    bool bad = false;
    bool weakly_bad = false;
};

struct CellEstimate {
    int m = 0;
    double p = 0.0;
    std::uint64_t seed = 0;
    Proportion eta;    // bad
    Proportion theta;  // weakly bad (not strongly good)
};

inline std::string cell_experiment_id(int m, double p) { return "cells/m=" + std::to_string(m) + "/p=" + id_number(p); }

inline CellTrial cell_trial(int m, double p, const ScaleParams& params, std::uint64_t master, std::uint64_t trial) {
    const GridConfig cfg = GridConfig::square(m);
    const auto a = sample_below(cfg, derive_seed(master, cell_experiment_id(m, p), trial), trial, p);
    const auto c = classify_cell(Droplet::of_grid(cfg), a, params, p);
    return {c.bad(), c.weakly_bad()};
}

// eta_m and theta_m from one set of sampled cells.
inline CellEstimate estimate_cells(int m, double p, std::int64_t trials, const ScaleParams& params,
                                   std::uint64_t seed, int threads = 1) {
    if (m < 3) throw std::invalid_argument("estimate_cells: m must be >= 3");
    if (trials < 1) throw std::invalid_argument("estimate_cells: need at least one trial");
    params.validate();
    const auto rs = parallel_map(std::size_t(trials), threads,
                                 [&](std::size_t i) { return cell_trial(m, p, params, seed, i); });
    std::int64_t bad = 0, weak = 0;
    for (const auto& r : rs) {
        bad += r.bad;
        weak += r.weakly_bad;
    }
    return {m, p, seed, wilson(bad, trials), wilson(weak, trials)};
}

inline Proportion estimate_eta(int m, double p, std::int64_t trials, const ScaleParams& params, std::uint64_t seed,
                               int threads = 1) {
    return estimate_cells(m, p, trials, params, seed, threads).eta;
}

inline Proportion estimate_theta(int m, double p, std::int64_t trials, const ScaleParams& params,
                                 std::uint64_t seed, int threads = 1) {
    return estimate_cells(m, p, trials, params, seed, threads).theta;
}

inline double eta_bound(double eta_m, int m, double q) {
    return std::pow(eta_m, 4) + 100.0 * double(m) * m * std::pow(q, 4.0 * m - 8.0);
}

inline double theta_bound(double theta_m, int m, double q) {
    return std::pow(theta_m, 4) + 50.0 * double(m) * m * std::pow(q, 2.0 * m);
}

struct RecursionCheck {
    int m = 0;
    double p = 0.0;
    Proportion at_m;
    Proportion at_2m;
    double bound = 0.0;  // evaluated at the upper end of the m-interval
    Verdict verdict = Verdict::inconclusive;
};

struct CellRecursionReport {
    RecursionCheck eta;
    RecursionCheck theta;
};

// The bounds increase in the m-level rate, so plugging in its upper
// confidence limit is the lenient side; FAIL needs the whole 2m-interval
// above that.
inline CellRecursionReport cell_recursion_check(int m, double p, std::int64_t trials, const ScaleParams& params,
                                                std::uint64_t seed, int threads = 1) {
    const auto lo = estimate_cells(m, p, trials, params, seed, threads);
    const auto hi = estimate_cells(2 * m, p, trials, params, seed, threads);
    const double q = 1.0 - p;
    CellRecursionReport r;
    r.eta = {m, p, lo.eta, hi.eta, eta_bound(lo.eta.hi, m, q), {}};
    r.eta.verdict = upper_bound_verdict(hi.eta.lo, hi.eta.hi, r.eta.bound);
    r.theta = {m, p, lo.theta, hi.theta, theta_bound(lo.theta.hi, m, q), {}};
    r.theta.verdict = upper_bound_verdict(hi.theta.lo, hi.theta.hi, r.theta.bound);
    return r;
}

// --------------------------------------------------- critical grid size

struct KPoint {
    int K = 0;
    Proportion gamma;
};

struct KEstimate {
    double p = 0.0;
    int K_min = 0;  // smallest K where a critical droplet fits
    int K_hat = 0;
    double mu_hat = 0.0;
    Proportion at_K;
    double tolerance = 0.0;
    bool tolerance_met = false;
    bool monotone = true;
    std::vector<KPoint> path;  // evaluation order
};

class BracketNotFound : public std::runtime_error {
public:
    BracketNotFound(const std::string& what, int lo_, int hi_) : std::runtime_error(what), lo(lo_), hi(hi_) {}
    int lo;
    int hi;
};

// The K x K grids are lower-left windows of one K_max x K_max draw per
// trial, so Gamma([K]^2) is monotone in K trial by trial.
inline Proportion gamma_probability(int K, double p, std::int64_t trials, std::uint64_t seed, int K_max,
                                    int threads = 1) {
    const CriticalParams cp(p);
    cp.require_window();
    const GridConfig cfg = GridConfig::square(K);
    const std::string id = "gamma/p=" + id_number(p);
    const auto hits = parallel_map(std::size_t(trials), threads, [&](std::size_t i) {
        const auto a = sample_window(cfg, derive_seed(seed, id, i), i, p, std::uint64_t(K_max));
        return detect_critical(Droplet::of_grid(cfg), a, cp);
    });
    return wilson(std::count(hits.begin(), hits.end(), true), trials);
}

// Bisection for the K where P(Gamma([K]^2)) crosses 1/2. Below
// K_min = ceil(window_lo / 2) no critical droplet fits, so the search starts
// there and doubles upward to bracket.
inline KEstimate estimate_critical_K(double p, std::int64_t trials, double tolerance, std::uint64_t seed,
                                     int K_max = 4096, int threads = 1) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("estimate_critical_K: p must lie in (0,1)");
    if (trials < 1) throw std::invalid_argument("estimate_critical_K: need at least one trial");
    const CriticalParams cp(p);
    cp.require_window();
    KEstimate r;
    r.p = p;
    r.tolerance = tolerance;
    r.K_min = std::max(1, (cp.window_lo() + 1) / 2);
    if (r.K_min > K_max)
        throw BracketNotFound("estimate_critical_K: smallest admissible K exceeds K_max", r.K_min, K_max);
    std::map<int, Proportion> seen;
    auto eval = [&](int K) {
        auto it = seen.find(K);
        if (it != seen.end()) return it->second;
        const auto g = gamma_probability(K, p, trials, seed, K_max, threads);
        seen.emplace(K, g);
        r.path.push_back({K, g});
        return g;
    };
    int lo = r.K_min, hi = r.K_min;
    if (eval(lo).point < 0.5) {
        for (;;) {
            if (hi == K_max)
                throw BracketNotFound("estimate_critical_K: P(Gamma) stays below 1/2 up to K_max", lo, hi);
            hi = std::min(K_max, 2 * hi);
            if (eval(hi).point >= 0.5) break;
            lo = hi;
        }
        while (hi - lo > 1) {
            const int mid = lo + (hi - lo) / 2;
            if (eval(mid).point >= 0.5) hi = mid;
            else lo = mid;
        }
    }
    // Closest evaluated point to 1/2; ties to the smaller K.
    r.K_hat = seen.begin()->first;
    for (const auto& [K, g] : seen)
        if (std::abs(g.point - 0.5) < std::abs(seen.at(r.K_hat).point - 0.5)) r.K_hat = K;
    r.at_K = seen.at(r.K_hat);
    r.mu_hat = p * std::log(double(r.K_hat));
    r.tolerance_met = std::abs(r.at_K.point - 0.5) <= tolerance;
    const KPoint* prev = nullptr;
    std::vector<KPoint> sorted(r.path);
    std::sort(sorted.begin(), sorted.end(), [](const KPoint& a, const KPoint& b) { return a.K < b.K; });
    for (const auto& k : sorted) {
        if (prev && k.gamma.hi < prev->gamma.lo) r.monotone = false;
        prev = &k;
    }
    return r;
}

// ------------------------------------------------------ time scaling

struct TimeTrial {
    std::uint64_t trial_index = 0;
    std::uint64_t seed = 0;
    int n = 0;
    double p = 0.0;
    std::optional<std::uint32_t> T;  // nullopt: never percolates
    int longest_double_line = 0;
    std::uint32_t blocking_bound = 0;  // floor((l - 1) / 2)
    bool blocking_ok = true;
};

inline std::string time_experiment_id(int n, double p) { return "time/n=" + std::to_string(n) + "/p=" + id_number(p); }

inline double predicted_time(int n, double p) { return std::log(double(n)) / (2.0 * -std::log1p(-p)); }

inline TimeTrial time_trial(int n, double p, std::uint64_t master, std::uint64_t trial) {
    TimeTrial t;
    t.trial_index = trial;
    t.seed = derive_seed(master, time_experiment_id(n, p), trial);
    t.n = n;
    t.p = p;
    const auto a = sample_initial(GridConfig::square(n), SimParams(p, t.seed, trial));
    const auto line = longest_empty_double_line(a);
    t.longest_double_line = line.length;
    t.blocking_bound = line.length >= 1 ? std::uint32_t((line.length - 1) / 2) : 0u;
    const auto run = evolve(a);
    if (run.status == EvolveStatus::percolated) t.T = run.steps;
    t.blocking_ok = !t.T || *t.T >= t.blocking_bound;
    return t;
}

struct TimeRow {
    int n = 0;
    double p = 0.0;
    std::int64_t trials = 0;
    std::int64_t percolated = 0;
    std::int64_t blocking_violations = 0;
    double predicted = 0.0;
    MedianEstimate T;
    double ratio = 0.0;
    double ratio_lo = 0.0;
    double ratio_hi = 0.0;
    bool in_band = false;
};

inline constexpr double band_lo = 0.5;
inline constexpr double band_hi = 2.0;

inline TimeRow summarize_time(int n, double p, const std::vector<TimeTrial>& ts) {
    TimeRow r;
    r.n = n;
    r.p = p;
    r.trials = std::int64_t(ts.size());
    r.predicted = predicted_time(n, p);
    std::vector<double> xs;
    for (const auto& t : ts) {
        r.percolated += t.T.has_value();
        r.blocking_violations += !t.blocking_ok;
        xs.push_back(t.T ? double(*t.T) : std::numeric_limits<double>::infinity());
    }
    r.T = median_ci(xs);
    r.ratio = r.T.median / r.predicted;
    r.ratio_lo = r.T.lo / r.predicted;
    r.ratio_hi = r.T.hi / r.predicted;
    r.in_band = r.ratio >= band_lo && r.ratio <= band_hi;
    return r;
}

// Distance of an interval from 1: smallest and largest |r - 1| over it.
inline std::pair<double, double> distance_from_one(double lo, double hi) {
    const double near = (lo <= 1.0 && 1.0 <= hi) ? 0.0 : std::min(std::abs(lo - 1.0), std::abs(hi - 1.0));
    return {near, std::max(std::abs(lo - 1.0), std::abs(hi - 1.0))};
}

struct TrendCheck {
    double p = 0.0;
    int n_small = 0;
    int n_large = 0;
    double dev_small = 0.0;  // |ratio - 1| at the small n
    double dev_large = 0.0;
    bool pass = false;  // the large-n ratio is not significantly farther from 1
};

inline TrendCheck trend_check(const TimeRow& small, const TimeRow& large) {
    TrendCheck t{small.p, small.n, large.n, std::abs(small.ratio - 1.0), std::abs(large.ratio - 1.0), false};
    t.pass = distance_from_one(large.ratio_lo, large.ratio_hi).first <=
             distance_from_one(small.ratio_lo, small.ratio_hi).second;
    return t;
}

struct TimeScalingReport {
    std::vector<TimeRow> rows;
    std::vector<TrendCheck> trends;  // smallest vs largest n at each p
    std::int64_t blocking_violations = 0;
    bool band_ok = true;
    bool trend_ok = true;
};

inline TimeScalingReport time_scaling_experiment(const std::vector<int>& ns, const std::vector<double>& ps,
                                                 std::int64_t trials, std::uint64_t seed, int threads = 1,
                                                 std::vector<TimeTrial>* records = nullptr) {
    if (ns.empty() || ps.empty() || trials < 1) throw std::invalid_argument("time_scaling_experiment: empty sweep");
    TimeScalingReport rep;
    for (double p : ps) {
        std::vector<TimeRow> at_p;
        for (int n : ns) {
            auto ts = parallel_map(std::size_t(trials), threads, [&](std::size_t i) { return time_trial(n, p, seed, i); });
            auto row = summarize_time(n, p, ts);
            rep.blocking_violations += row.blocking_violations;
            rep.band_ok = rep.band_ok && row.in_band;
            at_p.push_back(row);
            rep.rows.push_back(row);
            if (records) records->insert(records->end(), ts.begin(), ts.end());
        }
        if (at_p.size() >= 2) {
            const auto by_n = [](const TimeRow& a, const TimeRow& b) { return a.n < b.n; };
            const auto mn = std::min_element(at_p.begin(), at_p.end(), by_n);
            const auto mx = std::max_element(at_p.begin(), at_p.end(), by_n);
            rep.trends.push_back(trend_check(*mn, *mx));
            rep.trend_ok = rep.trend_ok && rep.trends.back().pass;
        }
    }
    return rep;
}

// ---------------------------------------------------------------- slabs

struct SlabTrial {
    std::uint64_t trial_index = 0;
    SlabVerdict verdict;
};

struct SlabReport {
    double p = 0.0;
    double M = 0.0;
    int long_side = 0;
    int short_side = 0;
    std::int64_t attempts = 0;
    std::int64_t subcritical = 0;
    std::int64_t gamma_events = 0;
    bool budget_exhausted = false;
    std::optional<Proportion> fast_given_subcritical;
    double mean_flood_over_length = 0.0;  // mean flood total / (M/p), subcritical trials
    std::vector<std::uint32_t> flood_totals;  // subcritical trials, in trial order
    std::uint32_t threshold = 0;
};

inline std::string slab_experiment_id(double p, double M) { return "slab/p=" + id_number(p) + "/M=" + id_number(M); }

inline SlabTrial slab_trial(double p, double M, const ScaleParams& params, std::uint64_t master,
                            std::uint64_t trial) {
    const auto shape = slab_shape(M, p);
    const GridConfig cfg(shape.long_side, shape.short_side);
    const auto a = sample_below(cfg, derive_seed(master, slab_experiment_id(p, M), trial), trial, p);
    return {trial, classify_slab(Droplet::of_grid(cfg), a, p, params, M)};
}

// Rejection sampling on subcriticality: trial indices are consumed in
// order until `wanted` subcritical slabs are seen or `retry_cap` attempts
// are spent.
inline SlabReport slab_experiment(double p, double M, const ScaleParams& params, std::int64_t wanted,
                                  std::uint64_t seed, std::int64_t retry_cap = 100000, int threads = 1,
                                  std::vector<SlabTrial>* records = nullptr) {
    params.validate();
    if (wanted < 1) throw std::invalid_argument("slab_experiment: need at least one trial");
    SlabReport rep;
    rep.p = p;
    rep.M = M;
    const auto shape = slab_shape(M, p);
    rep.long_side = shape.long_side;
    rep.short_side = shape.short_side;
    rep.threshold = slab_threshold(M, p, params);
    std::int64_t fast = 0;
    double flood_sum = 0.0;
    const std::int64_t batch = std::max<std::int64_t>(wanted, 16);
    while (rep.subcritical < wanted && rep.attempts < retry_cap) {
        const std::int64_t count = std::min(batch, retry_cap - rep.attempts);
        const std::int64_t first = rep.attempts;
        auto ts = parallel_map(std::size_t(count), threads, [&](std::size_t i) {
            return slab_trial(p, M, params, seed, std::uint64_t(first) + i);
        });
        for (const auto& t : ts) {
            if (rep.subcritical >= wanted) break;
            ++rep.attempts;
            rep.gamma_events += t.verdict.gamma_event;
            if (records) records->push_back(t);
            if (!t.verdict.subcritical) continue;
            ++rep.subcritical;
            fast += t.verdict.fast;
            flood_sum += double(t.verdict.flood_total);
            rep.flood_totals.push_back(t.verdict.flood_total);
        }
    }
    rep.budget_exhausted = rep.subcritical < wanted;
    if (rep.subcritical > 0) {
        rep.fast_given_subcritical = wilson(fast, rep.subcritical);
        rep.mean_flood_over_length = flood_sum / double(rep.subcritical) / (M / p);
    }
    return rep;
}

// --------------------------------------------------------------- Harris

using Event = std::function<bool(const SiteSet&)>;

enum class Monotonicity { increasing, decreasing };

struct NamedEvent {
    std::string name;
    Monotonicity kind = Monotonicity::increasing;
    Event eval;
};

class NotMonotone : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Spot check on coupled pairs A subset of A': an increasing event must not
// be lost, a decreasing one must not be gained.
inline void check_monotone(const NamedEvent& e, int n, double p, std::uint64_t seed, int pairs = 200) {
    const GridConfig cfg = GridConfig::square(n);
    for (int i = 0; i < pairs; ++i) {
        const double lo = p * (0.5 + 0.5 * double(i % 5) / 4.0);
        const double hi = std::min(1.0, lo + 0.1 + 0.05 * double(i % 3));
        const auto small = sample_below(cfg, seed, std::uint64_t(i), lo);
        const auto big = sample_below(cfg, seed, std::uint64_t(i), hi);
        const bool s = e.eval(small), b = e.eval(big);
        if (e.kind == Monotonicity::increasing ? (s && !b) : (b && !s))
            throw NotMonotone("event '" + e.name + "' is not " +
                              (e.kind == Monotonicity::increasing ? "increasing" : "decreasing"));
    }
}

struct HarrisCheck {
    std::string e;
    std::string f;
    std::string relation;  // "=", ">=" or "<="
    CovarianceEstimate cov;
    double tolerance = 0.0;  // in standard errors
    bool pass = false;
};

inline HarrisCheck evaluate_harris(const std::string& e, const std::string& f, const std::string& relation,
                                   const PairCounts& counts, double tolerance) {
    HarrisCheck h{e, f, relation, covariance(counts), tolerance, false};
    const double slack = tolerance * h.cov.se;
    if (relation == ">=") h.pass = h.cov.p_both >= h.cov.product - slack;
    else if (relation == "<=") h.pass = h.cov.p_both <= h.cov.product + slack;
    else h.pass = std::abs(h.cov.diff) <= slack;
    return h;
}

struct HarrisReport {
    int n = 0;
    double p = 0.0;
    int k = 0;
    std::int64_t trials = 0;
    std::vector<HarrisCheck> checks;
    bool pass = true;
};

// Events on the n x n grid: rows 0 and n-1 holding >= k occupied sites
// (increasing, on disjoint sites), percolation (increasing) and the absence
// of an internally spanned critical droplet (decreasing).
inline std::vector<NamedEvent> default_harris_events(int n, double p, int k) {
    const CriticalParams cp(p);
    auto row_at_least = [k](int y) {
        return [k, y](const SiteSet& a) {
            int c = 0;
            for (int x = 0; x < a.width(); ++x) c += a.test(x, y);
            return c >= k;
        };
    };
    return {
        {"row0>=k", Monotonicity::increasing, row_at_least(0)},
        {"top_row>=k", Monotonicity::increasing, row_at_least(n - 1)},
        {"percolates", Monotonicity::increasing, [](const SiteSet& a) { return evolve(a).closure.is_full(); }},
        {"no_critical", Monotonicity::decreasing,
         [cp](const SiteSet& a) { return !detect_critical(Droplet::of_grid(a.config()), a, cp); }},
    };
}

inline HarrisReport harris_check(int n, double p, int k, std::int64_t trials, std::uint64_t seed, int threads = 1) {
    const auto events = default_harris_events(n, p, k);
    for (const auto& e : events) check_monotone(e, n, p, derive_seed(seed, "harris/monotone", 0));
    const GridConfig cfg = GridConfig::square(n);
    const std::string id = "harris/n=" + std::to_string(n) + "/p=" + id_number(p);
    const auto outcomes = parallel_map(std::size_t(trials), threads, [&](std::size_t i) {
        const auto a = sample_below(cfg, derive_seed(seed, id, i), i, p);
        std::vector<char> v;
        for (const auto& e : events) v.push_back(e.eval(a));
        return v;
    });
    PairCounts indep, inc, dec;
    for (const auto& o : outcomes) {
        indep.add(o[0], o[1]);
        inc.add(o[0], o[2]);
        dec.add(o[2], o[3]);
    }
    HarrisReport rep{n, p, k, trials, {}, true};
    rep.checks.push_back(evaluate_harris("row0>=k", "top_row>=k", "=", indep, z95));
    rep.checks.push_back(evaluate_harris("row0>=k", "percolates", ">=", inc, 3.0));
    rep.checks.push_back(evaluate_harris("percolates", "no_critical", "<=", dec, 3.0));
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
    return rep;
}

// ---------------------------------------------------- corner probe

struct UprightProbe {
    int t = 0;
    double p = 0.0;
    double L = 0.0;
    std::int64_t t_prime = 0;
    double bound = 0.0;  // 16 q^(t - t') / p, may exceed 1
    Proportion uninfected;
    Verdict verdict = Verdict::vacuous;
};

// P(corner of [0,t]^2 still uninfected at time t) against the bound, with
// t' = floor(B L / p) and L from derive_scales(p, n, params, K).
inline UprightProbe upright_bound_probe(int t, double p, std::int64_t trials, const ScaleParams& params, double K,
                                        double n, std::uint64_t seed, int threads = 1) {
    if (t < 0) throw std::invalid_argument("upright_bound_probe: t must be >= 0");
    UprightProbe r;
    r.t = t;
    r.p = p;
    r.L = derive_scales(p, n, params, K).L;
    r.t_prime = std::int64_t(std::floor(params.B * r.L / p));
    const double log_bound = std::log(16.0) + double(t - r.t_prime) * std::log1p(-p) - std::log(p);
    r.bound = std::exp(std::min(log_bound, 700.0));
    const GridConfig cfg = GridConfig::square(t + 1);
    const std::string id = "upright/t=" + std::to_string(t) + "/p=" + id_number(p);
    const auto alive = parallel_map(std::size_t(trials), threads, [&](std::size_t i) {
        const auto a = sample_below(cfg, derive_seed(seed, id, i), i, p);
        return !evolve_to(a, std::uint32_t(t)).test(0, 0);
    });
    r.uninfected = wilson(std::count(alive.begin(), alive.end(), true), trials);
    r.verdict = r.bound >= 1.0 ? Verdict::vacuous : upper_bound_verdict(r.uninfected.lo, r.uninfected.hi, r.bound);
    return r;
}

}  // namespace bootperc
