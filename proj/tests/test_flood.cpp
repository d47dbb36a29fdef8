#include <gtest/gtest.h>

#include <random>

#include <bootperc/flood.hpp>
#include <bootperc/random.hpp>
#include <bootperc/slab.hpp>

#include "oracles.hpp"

using namespace bootperc;

namespace {

// Flood times straight from the definition: closure of D ∩ A inside D plus
// an explicit ring, stepped with the naive rule. Returns [y][x] over D.
std::vector<std::vector<int>> oracle_flood(const Droplet& d, const SiteSet& a) {
    const int w = d.width(), h = d.height();
    oracle::Cells in(std::size_t(h), std::vector<char>(std::size_t(w), 0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) in[std::size_t(y)][std::size_t(x)] = a.test(d.a + x, d.b + y);
    in = oracle::closure(in);
    oracle::Cells c(std::size_t(h + 2), std::vector<char>(std::size_t(w + 2), 1));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) c[std::size_t(y + 1)][std::size_t(x + 1)] = in[std::size_t(y)][std::size_t(x)];
    std::vector<std::vector<int>> t(std::size_t(h), std::vector<int>(std::size_t(w), -1));
    for (int step = 0;; ++step) {
        bool all = true;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (c[std::size_t(y + 1)][std::size_t(x + 1)] && t[std::size_t(y)][std::size_t(x)] < 0)
                    t[std::size_t(y)][std::size_t(x)] = step;
                all = all && t[std::size_t(y)][std::size_t(x)] >= 0;
            }
        if (all) return t;
        c = oracle::step(c);
    }
}

Droplet random_droplet(const GridConfig& cfg, std::mt19937_64& rng) {
    const int x0 = int(rng() % std::uint64_t(cfg.width)), x1 = int(rng() % std::uint64_t(cfg.width));
    const int y0 = int(rng() % std::uint64_t(cfg.height)), y1 = int(rng() % std::uint64_t(cfg.height));
    return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

}  // namespace

TEST(Flood, FullAndSmallEmpty) {
    const GridConfig cfg = GridConfig::square(6);
    const auto full = flood(Droplet{1, 1, 4, 3}, SiteSet::full(cfg));
    EXPECT_EQ(full.total, 0u);

    const auto e = flood(Droplet{2, 2, 4, 4}, SiteSet(cfg));
    EXPECT_EQ(e.time_at({2, 2}), 1u);
    EXPECT_EQ(e.time_at({4, 4}), 1u);
    EXPECT_EQ(e.time_at({3, 2}), 2u);
    EXPECT_EQ(e.time_at({2, 3}), 2u);
    EXPECT_EQ(e.time_at({3, 3}), 3u);
    EXPECT_EQ(e.total, 3u);
    EXPECT_THROW(e.time_at({1, 1}), std::out_of_range);
}

// Empty W x H droplet: the ring enters at the corners, so a site at local
// (i, j) fills at min(i, W-1-i) + min(j, H-1-j) + 1 once both sides are at
// least 2. A one-wide strip sees the ring on both sides and fills at once.
// For even m the m x m total is m - 1, not m.
TEST(Flood, EmptyRectanglePattern) {
    for (int w = 1; w <= 12; ++w)
        for (int h = 1; h <= 12; ++h) {
            const Droplet d{0, 0, w - 1, h - 1};
            const SiteSet a(GridConfig(w, h));
            const auto f = flood(d, a);
            const auto want = oracle_flood(d, a);
            for (int j = 0; j < h; ++j)
                for (int i = 0; i < w; ++i) {
                    ASSERT_EQ(int(f.time_at({i, j})), want[std::size_t(j)][std::size_t(i)]);
                    const int formula =
                        std::min(w, h) == 1 ? 1 : std::min(i, w - 1 - i) + std::min(j, h - 1 - j) + 1;
                    ASSERT_EQ(int(f.time_at({i, j})), formula);
                }
            ASSERT_EQ(int(f.total), std::min(w, h) == 1 ? 1 : (w - 1) / 2 + (h - 1) / 2 + 1);
        }
    EXPECT_EQ(flood(Droplet{0, 0, 4, 4}, SiteSet(GridConfig::square(5))).total, 5u);
    EXPECT_EQ(flood(Droplet{0, 0, 5, 5}, SiteSet(GridConfig::square(6))).total, 5u);
}

TEST(Flood, MatchesOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const GridConfig cfg(1 + int(rng() % 30), 1 + int(rng() % 30));
        const auto a = oracle::random_set(cfg, 0.05 + 0.05 * double(trial % 5), rng);
        const auto d = random_droplet(cfg, rng);
        const auto f = flood(d, a);
        const auto want = oracle_flood(d, a);
        int mx = 0;
        for (int y = 0; y < d.height(); ++y)
            for (int x = 0; x < d.width(); ++x) {
                ASSERT_EQ(int(f.times.at(x, y)), want[std::size_t(y)][std::size_t(x)]) << trial;
                mx = std::max(mx, want[std::size_t(y)][std::size_t(x)]);
                ASSERT_EQ(f.in_initial({d.a + x, d.b + y}), want[std::size_t(y)][std::size_t(x)] == 0);
            }
        ASSERT_EQ(int(f.total), mx);
    }
}

TEST(Flood, ContainsFullGridEvolution) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const GridConfig cfg(4 + int(rng() % 40), 4 + int(rng() % 40));
        const auto a = sample_initial(cfg, SimParams(0.04 + 0.03 * double(trial % 6), 900, std::uint64_t(trial)));
        const auto d = random_droplet(cfg, rng);
        const auto f = flood(d, a);
        SiteSet state = a, scratch(cfg);
        for (std::uint32_t t = 0; t <= f.total; ++t) {
            const auto lvl = f.level(t);
            for (int y = d.b; y <= d.d; ++y)
                for (int x = d.a; x <= d.c; ++x)
                    if (state.test(x, y)) {
                        ASSERT_TRUE(lvl.test(x - d.a, y - d.b)) << trial << " t=" << t;
                    }
            step_in_place(state, scratch);
        }
    }
}

TEST(Flood, Monotone) {
    const GridConfig cfg = GridConfig::square(40);
    const auto a = sample_initial(cfg, SimParams(0.1, 3));
    const Droplet d{3, 5, 30, 38};
    const auto f = flood(d, a);
    EXPECT_EQ(f.level(0), f.initial);
    EXPECT_EQ(f.initial, evolve(restrict_to(a, d)).closure);
    for (std::uint32_t t = 0; t < f.total; ++t) ASSERT_TRUE(f.level(t).subset_of(f.level(t + 1)));
    EXPECT_TRUE(f.level(f.total).is_full());
}

TEST(SiteGeometry, Examples) {
    const Droplet d{10, 20, 14, 24};
    const auto g = site_geometry({12, 22}, d);
    EXPECT_EQ(g.w, 3);
    EXPECT_EQ(g.h, 3);
    const auto corner = site_geometry({10, 20}, d);
    EXPECT_EQ(corner.w, 1);
    EXPECT_EQ(corner.h, 1);
    EXPECT_THROW(site_geometry({9, 20}, d), std::out_of_range);

    for (auto k : {Wake::down, Wake::up, Wake::left, Wake::right}) {
        int count = 0;
        for (int y = d.b; y <= d.d; ++y)
            for (int x = d.a; x <= d.c; ++x) count += g.in_wake(k, {x, y});
        EXPECT_EQ(count, 9);
    }
    EXPECT_TRUE(g.in_wake(Wake::down, {12, 20}));
    EXPECT_TRUE(g.in_wake(Wake::down, {10, 20}));
    EXPECT_FALSE(g.in_wake(Wake::down, {10, 21}));
    EXPECT_FALSE(g.in_wake(Wake::down, {12, 23}));
    EXPECT_TRUE(g.in_wake(Wake::right, {14, 21}));
    EXPECT_FALSE(g.in_wake(Wake::down, {12, 19}));
}

TEST(Flood, WakeLemma) {
    std::mt19937_64 rng(91);
    long long checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int w = 1 + int(rng() % 40), h = 1 + int(rng() % 40);
        const GridConfig cfg(w, h);
        const auto a = oracle::random_set(cfg, std::array{0.02, 0.05, 0.1, 0.2}[std::size_t(trial % 4)], rng);
        const Droplet d = Droplet::of_grid(cfg);
        const auto f = flood(d, a);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const auto t = f.times.at(x, y);
                if (t == 0) continue;
                const auto lvl = f.level(t);
                const auto g = site_geometry({x, y}, d);
                bool some = false;
                for (auto k : {Wake::down, Wake::up, Wake::left, Wake::right}) {
                    bool all = true;
                    for (int yy = 0; yy < h && all; ++yy)
                        for (int xx = 0; xx < w && all; ++xx)
                            if (g.in_wake(k, {xx, yy}) && !lvl.test(xx, yy)) all = false;
                    if (all) {
                        some = true;
                        break;
                    }
                }
                ASSERT_TRUE(some) << "trial " << trial << " site " << x << "," << y;
                ++checked;
            }
    }
    EXPECT_GT(checked, 5000);
}

TEST(Slab, FullAndEmpty) {
    ScaleParams sp;
    sp.relaxed = true;
    sp.B = 1;
    // M = 6, p = 0.3: long side 20, short side 6.
    const double M = 6.0, p = 0.3;
    const GridConfig cfg(22, 8);
    const Droplet d{1, 1, 20, 6};
    const auto full = classify_slab(d, SiteSet::full(cfg), p, sp, M);
    EXPECT_TRUE(full.fast);
    EXPECT_EQ(full.flood_total, 0u);
    EXPECT_EQ(full.max_phi, 26);
    EXPECT_TRUE(full.subcritical);  // gamma = 37.04 > 26
    EXPECT_TRUE(full.gamma_event);  // the slab itself: 18.5 <= 26 <= 37.04
    const auto empty = classify_slab(d, SiteSet(cfg), p, sp, M);
    EXPECT_TRUE(empty.subcritical);
    EXPECT_EQ(empty.flood_total, std::uint32_t(19 / 2 + 5 / 2 + 1));
    EXPECT_EQ(empty.threshold, 5u);
    EXPECT_FALSE(empty.fast);
    EXPECT_THROW(classify_slab(Droplet{1, 1, 19, 6}, SiteSet(cfg), p, sp, M), std::invalid_argument);
}

TEST(Slab, EmptySlabIsNeverFastBelowOneHalf) {
    // Empty flood total is about M/(2p) + M/2, above c M / p for c < 1/2.
    ScaleParams sp;
    sp.relaxed = true;
    for (double p : {0.05, 0.1, 0.2, 0.3, 0.45})
        for (double M : {10.0, 20.0, 40.0}) {
            const auto shape = slab_shape(M, p);
            const GridConfig cfg(shape.long_side, shape.short_side);
            const auto v = classify_slab(Droplet::of_grid(cfg), SiteSet(cfg), p, sp, M);
            EXPECT_FALSE(v.fast) << p << " " << M;
        }
}
