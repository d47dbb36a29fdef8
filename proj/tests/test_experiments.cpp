#include <gtest/gtest.h>

#include <functional>
#include <random>

#include <bootperc/combinatorics.hpp>
#include <bootperc/experiments.hpp>

using namespace bootperc;

TEST(Parallel, OrderAndErrors) {
    const auto one = parallel_map(100, 1, [](std::size_t i) { return i * i; });
    const auto four = parallel_map(100, 4, [](std::size_t i) { return i * i; });
    EXPECT_EQ(one, four);
    EXPECT_EQ(one[7], 49u);
    EXPECT_THROW(parallel_map(50, 3,
                              [](std::size_t i) -> int {
                                  if (i == 17) throw std::runtime_error("boom");
                                  return 0;
                              }),
                 std::runtime_error);
    EXPECT_TRUE(parallel_map(0, 2, [](std::size_t i) { return i; }).empty());
    EXPECT_GE(resolve_threads(0), 1);
    EXPECT_THROW(resolve_threads(-1), std::invalid_argument);
}

TEST(Cells, Extremes) {
    const ScaleParams sp;
    const auto full = estimate_cells(8, 1.0, 20, sp, 1);
    EXPECT_EQ(full.eta.point, 0.0);
    EXPECT_EQ(full.theta.point, 0.0);
    const auto empty = estimate_cells(8, 1e-9, 20, sp, 1);
    EXPECT_EQ(empty.eta.point, 1.0);
    EXPECT_EQ(empty.theta.point, 1.0);
    EXPECT_THROW(estimate_cells(8, 0.0, 20, sp, 1), std::invalid_argument);
    EXPECT_THROW(estimate_cells(2, 0.5, 10, sp, 1), std::invalid_argument);
}

TEST(Cells, BadImpliesWeaklyBad) {
    const ScaleParams sp;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const auto t = cell_trial(8, 0.25, sp, 77, i);
        if (t.bad) {
            ASSERT_TRUE(t.weakly_bad);
        }
    }
    const auto e = estimate_cells(8, 0.25, 2000, sp, 77);
    EXPECT_GE(e.theta.point, e.eta.point);
    EXPECT_GT(e.eta.point, 0.0);
    EXPECT_LT(e.eta.point, 1.0);
}

TEST(Cells, Deterministic) {
    const ScaleParams sp;
    const auto a = estimate_cells(10, 0.3, 300, sp, 5, 1);
    const auto b = estimate_cells(10, 0.3, 300, sp, 5, 3);
    EXPECT_EQ(a.eta.successes, b.eta.successes);
    EXPECT_EQ(a.theta.successes, b.theta.successes);
}

TEST(Cells, RecursionBounds) {
    // 100 * 64 * 0.7^24 and 50 * 64 * 0.7^16 by hand.
    EXPECT_NEAR(eta_bound(0.0, 8, 0.7), 6400 * 1.9158123e-4, 1e-6);
    EXPECT_NEAR(theta_bound(0.0, 8, 0.7), 3200 * 3.3232931e-3, 1e-5);
    EXPECT_NEAR(eta_bound(0.5, 8, 0.0), 0.0625, 1e-15);
    const auto r = cell_recursion_check(8, 0.35, 2000, ScaleParams{}, 9);
    EXPECT_NE(r.eta.verdict, Verdict::fail);
    EXPECT_NE(r.theta.verdict, Verdict::fail);
    EXPECT_EQ(r.eta.at_m.trials, 2000);
    EXPECT_EQ(r.eta.at_2m.trials, 2000);
}

TEST(CriticalK, WindowsAreNested) {
    const double p = 0.2;
    const CriticalParams cp(p);
    for (std::uint64_t i = 0; i < 60; ++i) {
        bool prev = false;
        for (int K = 32; K <= 64; K += 8) {
            const GridConfig cfg = GridConfig::square(K);
            const auto a = sample_window(cfg, 3, i, p, 128);
            const auto big = sample_window(GridConfig::square(64), 3, i, p, 128);
            for (int y = 0; y < K; ++y)
                for (int x = 0; x < K; ++x) ASSERT_EQ(a.test(x, y), big.test(x, y));
            const bool now = detect_critical(Droplet::of_grid(cfg), a, cp);
            if (prev) {
                ASSERT_TRUE(now);
            }
            prev = now;
        }
    }
    EXPECT_EQ(sample_window(GridConfig(7, 5), 1, 2, 0.4, 7), sample_below(GridConfig(7, 5), 1, 2, 0.4));
    EXPECT_THROW(sample_window(GridConfig(7, 5), 1, 2, 0.4, 6), std::invalid_argument);
}

TEST(CriticalK, BisectionIsDeterministic) {
    const auto a = estimate_critical_K(0.2, 150, 0.1, 11, 256);
    const auto b = estimate_critical_K(0.2, 150, 0.1, 11, 256, 2);
    EXPECT_EQ(a.K_hat, b.K_hat);
    EXPECT_EQ(a.path.size(), b.path.size());
    EXPECT_EQ(a.K_min, 32);
    EXPECT_GE(a.K_hat, a.K_min);
    EXPECT_TRUE(a.monotone);
    EXPECT_DOUBLE_EQ(a.mu_hat, 0.2 * std::log(double(a.K_hat)));
    // A critical droplet needs 2K >= gamma/2, so mu_hat >= p ln(gamma / 4).
    EXPECT_GE(a.mu_hat, 0.2 * std::log(125.0 / 4.0) - 1e-12);
    EXPECT_THROW(estimate_critical_K(0.2, 10, 0.1, 11, 20), BracketNotFound);
}

TEST(TimeScaling, Basics) {
    EXPECT_NEAR(predicted_time(512, 0.3), 8.746, 1e-3);
    const auto full = time_trial(16, 1.0, 1, 0);
    ASSERT_TRUE(full.T);
    EXPECT_EQ(*full.T, 0u);
    const auto none = time_trial(16, 0.0, 1, 0);
    EXPECT_FALSE(none.T);
    EXPECT_EQ(none.longest_double_line, 16);
    EXPECT_TRUE(none.blocking_ok);

    std::vector<TimeTrial> recs;
    const auto rep = time_scaling_experiment({32, 64}, {0.3}, 60, 5, 1, &recs);
    EXPECT_EQ(rep.blocking_violations, 0);
    ASSERT_EQ(rep.rows.size(), 2u);
    ASSERT_EQ(rep.trends.size(), 1u);
    EXPECT_EQ(recs.size(), 120u);
    for (const auto& t : recs) EXPECT_TRUE(t.blocking_ok);
    const auto again = time_scaling_experiment({32, 64}, {0.3}, 60, 5, 2);
    EXPECT_EQ(again.rows[1].T.median, rep.rows[1].T.median);
    EXPECT_EQ(again.rows[1].percolated, rep.rows[1].percolated);
}

TEST(TimeScaling, Trend) {
    TimeRow small, large;
    small.ratio = 0.7;
    small.ratio_lo = 0.6;
    small.ratio_hi = 0.8;
    large.ratio = 0.9;
    large.ratio_lo = 0.85;
    large.ratio_hi = 0.95;
    EXPECT_TRUE(trend_check(small, large).pass);
    large.ratio_lo = 0.3;
    large.ratio_hi = 0.35;
    EXPECT_FALSE(trend_check(small, large).pass);
    EXPECT_EQ(distance_from_one(0.9, 1.1).first, 0.0);
}

TEST(Slab, ExperimentAndTrend) {
    ScaleParams sp;
    std::vector<SlabTrial> recs;
    const auto rep = slab_experiment(0.1, 12.0, sp, 20, 3, 1000, 1, &recs);
    EXPECT_EQ(rep.long_side, 120);
    EXPECT_EQ(rep.short_side, 12);
    EXPECT_EQ(rep.subcritical, 20);  // phi <= 132 < gamma = 1000 always
    EXPECT_FALSE(rep.budget_exhausted);
    ASSERT_TRUE(rep.fast_given_subcritical);
    EXPECT_EQ(rep.threshold, 30u);
    const auto again = slab_experiment(0.1, 12.0, sp, 20, 3, 1000, 2);
    EXPECT_EQ(again.flood_totals, rep.flood_totals);

    // Flood time grows with the short side at fixed small p. At p = 0.08
    // these slabs are already almost filled by [[D]]_0, so the trend is
    // taken at p = 0.03.
    std::vector<double> ms, totals;
    for (double M : {30.0, 40.0, 50.0, 60.0}) {
        const auto r = slab_experiment(0.03, M, sp, 8, 21);
        for (auto t : r.flood_totals) {
            ms.push_back(M);
            totals.push_back(double(t));
        }
    }
    EXPECT_GT(spearman(ms, totals), 0.0);

    // Supercritical regime: the cap runs out.
    const auto cap = slab_experiment(0.45, 12.0, sp, 5, 3, 7);
    EXPECT_TRUE(cap.budget_exhausted);
    EXPECT_EQ(cap.attempts, 7);
}

TEST(Harris, Suite) {
    const auto rep = harris_check(14, 0.27, 4, 2000, 8);
    ASSERT_EQ(rep.checks.size(), 3u);
    for (const auto& c : rep.checks) {
        EXPECT_TRUE(c.pass) << c.e << " " << c.relation << " " << c.f;
        EXPECT_GT(c.cov.se, 0.0);
    }
    const NamedEvent odd{"exactly_one", Monotonicity::increasing, [](const SiteSet& a) { return a.count() == 1; }};
    EXPECT_THROW(check_monotone(odd, 3, 0.1, 1), NotMonotone);
    const NamedEvent dec{"empty", Monotonicity::decreasing, [](const SiteSet& a) { return a.empty(); }};
    EXPECT_NO_THROW(check_monotone(dec, 3, 0.1, 1));
}

TEST(Upright, Probe) {
    ScaleParams sp;
    sp.relaxed = true;
    sp.B = 0.01;
    sp.A_const = 0.01;
    const auto at0 = upright_bound_probe(0, 0.3, 4000, sp, 4.0, 1e4, 1);
    EXPECT_NEAR(at0.uninfected.point, 0.7, 0.03);
    EXPECT_EQ(at0.verdict, Verdict::vacuous);
    // 40 * 0.6^10 ~ 0.24, well above what 400 trials can resolve.
    const auto far = upright_bound_probe(10, 0.4, 400, sp, 4.0, 1e4, 1);
    EXPECT_NEAR(far.bound, 40 * std::pow(0.6, 10), 1e-9);
    EXPECT_EQ(far.verdict, Verdict::pass);
    // A bound below the Wilson resolution of the sample stays inconclusive.
    EXPECT_EQ(upright_bound_probe(60, 0.4, 400, sp, 4.0, 1e4, 1).verdict, Verdict::inconclusive);
    EXPECT_EQ(upright_bound_probe(5, 0.3, 10, ScaleParams{}, 20.0, 1e6, 1).verdict, Verdict::vacuous);
}

namespace {

// Subsets of size k containing v, tested for connectivity one by one.
std::uint64_t brute_count(const Graph& g, int v, int k) {
    const int n = g.order();
    std::uint64_t count = 0;
    std::vector<int> pick;
    std::function<void(int)> go = [&](int from) {
        if (int(pick.size()) == k) {
            if (std::find(pick.begin(), pick.end(), v) == pick.end()) return;
            std::vector<char> in(std::size_t(n), 0), seen(std::size_t(n), 0);
            for (int u : pick) in[std::size_t(u)] = 1;
            std::vector<int> stack{v};
            seen[std::size_t(v)] = 1;
            int reached = 0;
            while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                ++reached;
                for (int w : g.adj[std::size_t(u)])
                    if (in[std::size_t(w)] && !seen[std::size_t(w)]) {
                        seen[std::size_t(w)] = 1;
                        stack.push_back(w);
                    }
            }
            count += reached == k;
            return;
        }
        for (int u = from; u < n; ++u) {
            pick.push_back(u);
            go(u + 1);
            pick.pop_back();
        }
    };
    go(0);
    return count;
}

}  // namespace

TEST(Coffeetime, Examples) {
    const auto p3 = Graph::path(3);
    EXPECT_EQ(coffeetime_check(p3, 1, 1).count, 1u);
    EXPECT_EQ(coffeetime_check(p3, 1, 2).count, 2u);
    EXPECT_TRUE(coffeetime_check(p3, 1, 2).pass);
    const auto g5 = Graph::grid(5, 5);
    const auto r = coffeetime_check(g5, 12, 4);
    EXPECT_EQ(r.count, brute_count(g5, 12, 4));
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.bound, std::pow(3 * std::numbers::e, 4), 1e-6);
    EXPECT_THROW(coffeetime_check(Graph::path(2), 0, 1), std::invalid_argument);
    EXPECT_EQ(count_connected_subgraphs(p3, 0, 4), 0u);
}

TEST(Coffeetime, EnumerationMatchesBruteForce) {
    const auto corpus = coffeetime_corpus();
    EXPECT_EQ(corpus.size(), 10u + 10u + 4u + 13u + 50u);
    for (const auto& g : corpus) {
        ASSERT_LE(g.max_degree(), std::max(5, g.order() - 1));
        if (g.order() > 12) continue;
        for (int v = 0; v < g.order(); ++v)
            for (int k = 1; k <= std::min(5, g.order()); ++k)
                ASSERT_EQ(count_connected_subgraphs(g, v, k), brute_count(g, v, k)) << g.name << " " << v << " " << k;
    }
}

TEST(Calc, PointValues) {
    CalcParams cp;
    EXPECT_NEAR(calc_f(cp, cp.h, 0, 0), -cp.h * std::log(cp.epsilon), 1e-6);
    cp.epsilon = 1.0;
    EXPECT_EQ(calc_f(cp, cp.h, 0, 0), 0.0);
    EXPECT_EQ(calc_f(cp, 0, 0, 0), 0.0);
}

TEST(Calc, GridSearch) {
    for (double r : {1.0, 0.5}) {
        CalcParams cp;
        cp.rhs_fraction = r;
        const auto a = appendix_calc_check(cp, 40);
        const auto b = appendix_calc_check(cp, 60);
        EXPECT_TRUE(a.pass);
        EXPECT_TRUE(b.pass);
        EXPECT_TRUE(a.warnings.empty());
        EXPECT_GT(a.evaluated, 1000);
        EXPECT_GE(a.argmin.a + cp.sigma * a.argmin.b + a.gamma * a.argmin.c, r * cp.h * (1 - 1e-9));
    }
    // Large epsilon makes f negative somewhere, and the search sees it.
    CalcParams bad;
    bad.epsilon = 50.0;
    const auto c = appendix_calc_check(bad, 40);
    EXPECT_FALSE(c.pass);
    EXPECT_FALSE(c.warnings.empty());
}
