#include <gtest/gtest.h>

#include <random>

#include <bootperc/random.hpp>
#include <bootperc/waves.hpp>

#include "oracles.hpp"

using namespace bootperc;

namespace {

// One naive step on the union, computed on a padded local canvas.
bool union_closed(const std::vector<Droplet>& ds) {
    int x0 = ds[0].a, y0 = ds[0].b, x1 = ds[0].c, y1 = ds[0].d;
    for (const auto& d : ds) {
        x0 = std::min(x0, d.a);
        y0 = std::min(y0, d.b);
        x1 = std::max(x1, d.c);
        y1 = std::max(y1, d.d);
    }
    oracle::Cells c(std::size_t(y1 - y0 + 3), std::vector<char>(std::size_t(x1 - x0 + 3), 0));
    for (const auto& d : ds)
        for (int y = d.b; y <= d.d; ++y)
            for (int x = d.a; x <= d.c; ++x) c[std::size_t(y - y0 + 1)][std::size_t(x - x0 + 1)] = 1;
    return oracle::step(c) == c;
}

}  // namespace

TEST(Wave, Validate) {
    EXPECT_TRUE(validate_wave(Wave{{Droplet{5, 5, 9, 7}}}).valid);
    EXPECT_EQ(validate_wave(Wave{}).defect, WaveDefect::empty);

    const Wave good{{Droplet{0, 0, 1, 1}, Droplet{3, 2, 4, 3}}};
    EXPECT_TRUE(validate_wave(good).valid);
    EXPECT_TRUE(union_closed(good.droplets));

    const Wave touching{{Droplet{0, 0, 1, 1}, Droplet{2, 2, 3, 3}}};
    const auto t = validate_wave(touching);
    EXPECT_FALSE(t.valid);
    EXPECT_EQ(t.defect, WaveDefect::not_closed);
    EXPECT_FALSE(union_closed(touching.droplets));

    EXPECT_EQ(validate_wave(Wave{{Droplet{0, 0, 2, 2}, Droplet{2, 2, 4, 4}}}).defect, WaveDefect::overlap);
    // Closed and disjoint but the second droplet starts too high.
    EXPECT_EQ(validate_wave(Wave{{Droplet{0, 0, 0, 0}, Droplet{5, 3, 5, 3}}}).defect, WaveDefect::ordering);
    // Second droplet starts below the first.
    EXPECT_EQ(validate_wave(Wave{{Droplet{0, 2, 0, 2}, Droplet{5, 1, 5, 4}}}).defect, WaveDefect::ordering);
}

TEST(Wave, ValidateMatchesDefinitionOnRandomLists) {
    std::mt19937_64 rng(4);
    int valid = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        std::vector<Droplet> ds;
        const int k = 1 + int(rng() % 4);
        for (int i = 0; i < k; ++i) {
            const int a = int(rng() % 12), b = int(rng() % 12);
            ds.emplace_back(a, b, a + int(rng() % 3), b + int(rng() % 3));
        }
        bool disjoint = true;
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t j = i + 1; j < ds.size(); ++j)
                for (int y = ds[i].b; y <= ds[i].d; ++y)
                    for (int x = ds[i].a; x <= ds[i].c; ++x)
                        if (ds[j].contains(x, y)) disjoint = false;
        bool ordered = true;
        for (std::size_t i = 0; i + 1 < ds.size(); ++i)
            ordered = ordered && ds[i].b < ds[i + 1].b && ds[i + 1].b <= ds[i].d + 2 && ds[i].d < ds[i + 1].d;
        const bool want = disjoint && union_closed(ds) && ordered;
        ASSERT_EQ(validate_wave(Wave{ds}).valid, want) << trial;
        valid += want;
    }
    EXPECT_GT(valid, 100);
}

TEST(Wave, Metrics) {
    const Droplet parent{0, 0, 9, 9};
    const Wave w{{Droplet{0, 0, 1, 1}, Droplet{3, 2, 4, 3}}};
    const auto m = wave_metrics(w, parent);
    ASSERT_EQ(m.offsets.size(), 1u);
    EXPECT_EQ(m.offsets[0], 2);
    EXPECT_EQ(m.time, 1);
    EXPECT_EQ(m.height, 4);
    EXPECT_EQ(m.anchor, (Site{0, 0}));
    EXPECT_TRUE(m.is_up);
    EXPECT_FALSE(m.is_down);

    const auto single = wave_metrics(Wave{{Droplet{2, 3, 4, 8}}}, parent);
    EXPECT_EQ(single.time, 0);
    EXPECT_EQ(single.height, 6);

    Wave stack;
    for (int i = 0; i < 5; ++i) stack.droplets.push_back(Droplet::point({2 * i, i}));
    EXPECT_EQ(wave_metrics(stack, parent).time, 4);
    // Mirror image: each step moves left.
    Wave left;
    for (int i = 0; i < 5; ++i) left.droplets.push_back(Droplet::point({8 - 2 * i, i}));
    EXPECT_EQ(wave_metrics(left, parent).time, 4);

    EXPECT_THROW(wave_metrics(Wave{{Droplet{0, 0, 1, 1}, Droplet{2, 2, 3, 3}}}, parent), InvalidWave);
}

TEST(Wave, Crests) {
    const Droplet parent{0, 0, 20, 20};
    const Wave w{{Droplet{0, 0, 1, 1}, Droplet{3, 2, 4, 3}}};  // t(W) = 1
    // Upper crest: rows 1..3 outside D_2.
    EXPECT_EQ(crest_time(w, parent, {3, 1}, CrestSide::upper), 1);
    EXPECT_EQ(crest_time(w, parent, {4, 1}, CrestSide::upper), 1);
    EXPECT_EQ(crest_time(w, parent, {7, 2}, CrestSide::upper), 4);
    EXPECT_EQ(crest_time(w, parent, {0, 3}, CrestSide::upper), 4);
    EXPECT_FALSE(crest_time(w, parent, {3, 0}, CrestSide::upper));
    EXPECT_FALSE(crest_time(w, parent, {3, 4}, CrestSide::upper));
    EXPECT_FALSE(crest_time(w, parent, {3, 2}, CrestSide::upper));
    // Lower crest: rows 0..2 outside D_1.
    EXPECT_EQ(crest_time(w, parent, {1, 2}, CrestSide::lower), 1);
    EXPECT_EQ(crest_time(w, parent, {6, 0}, CrestSide::lower), 6);
    EXPECT_FALSE(crest_time(w, parent, {6, 3}, CrestSide::lower));
    EXPECT_FALSE(crest_time(w, parent, {25, 1}, CrestSide::lower));
}

TEST(Extract, SingleSiteOnBottomRow) {
    const GridConfig cfg(20, 20);
    SiteSet a(cfg);
    a.set(8, 0);
    const Droplet d = Droplet::of_grid(cfg);
    // Beside s on the bottom row: ring below plus s gives flood time 1.
    const auto e = extract_wave(d, a, {9, 0});
    EXPECT_EQ(e.wave, (Wave{{Droplet{8, 0, 8, 0}}}));
    EXPECT_EQ(e.time, 0);
    EXPECT_EQ(e.kind, WaveKind::up);
    EXPECT_TRUE(e.edge_anchored);
    EXPECT_EQ(e.flood_time, 1u);
    // Directly above s the site needs the row below to fill first, which
    // takes w(x) steps or more, so it is not eligible.
    WaveFinder finder(d, a);
    EXPECT_GE(int(finder.flood_result().time_at({8, 1})), site_geometry({8, 1}, d).w);
    EXPECT_FALSE(finder.eligible({8, 1}));
}

TEST(Extract, Preconditions) {
    const GridConfig cfg(10, 10);
    const Droplet d = Droplet::of_grid(cfg);
    // Empty droplet: every site has flood time w(x) + h(x) - 1 >= w(x).
    EXPECT_THROW(extract_wave(d, SiteSet(cfg), {4, 4}), std::invalid_argument);
    EXPECT_THROW(extract_wave(d, SiteSet(cfg), {0, 4}), std::invalid_argument);
    EXPECT_THROW(extract_wave(d, SiteSet::full(cfg), {4, 4}), std::invalid_argument);  // time 0
    EXPECT_THROW(extract_wave(d, SiteSet(cfg), {11, 4}), std::invalid_argument);
}

// A bottom-edge site can reach flood time 1 through a droplet one row up,
// while nothing of [[D]]_0 touches the bottom or top edge: no up- or
// down-wave exists at all, and the extractor falls back to the row above.
TEST(Extract, NoWaveOnTheEdge) {
    const GridConfig cfg(15, 10);
    SiteSet a(cfg);
    a.set(7, 1);
    const Droplet d = Droplet::of_grid(cfg);
    WaveFinder finder(d, a);
    for (const auto& f : finder.maximal_droplets()) {
        ASSERT_NE(f.b, d.b);
        ASSERT_NE(f.d, d.d);
    }
    ASSERT_EQ(finder.flood_result().time_at({7, 0}), 1u);
    ASSERT_EQ(finder.flood_result().time_at({6, 1}), 3u);
    for (Site x : {Site{7, 0}, Site{6, 1}}) {
        ASSERT_TRUE(finder.eligible(x));
        const auto e = finder.extract(x);
        EXPECT_FALSE(e.edge_anchored);
        EXPECT_EQ(e.wave, (Wave{{Droplet{7, 1, 7, 1}}}));
        EXPECT_EQ(e.height + 1, e.edge_height());
        EXPECT_GE(e.edge_height(), site_geometry(x, d).h);
    }
}

TEST(Extract, RandomDropletsProperty) {
    std::mt19937_64 rng(2718);
    int done = 0, anchored = 0;
    for (int trial = 0; done < 300 && trial < 3000; ++trial) {
        const double p = trial % 2 ? 0.05 : 0.1;
        const GridConfig cfg(4 + int(rng() % 57), 4 + int(rng() % 197));
        const auto a = sample_initial(cfg, SimParams(p, 313, std::uint64_t(trial)));
        const Droplet d = Droplet::of_grid(cfg);
        WaveFinder finder(d, a);
        std::vector<Site> eligible;
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x)
                if (finder.eligible({x, y})) eligible.push_back({x, y});
        if (eligible.empty()) continue;
        const Site x = eligible[rng() % eligible.size()];
        const auto e = finder.extract(x);
        ASSERT_TRUE(validate_wave(e.wave).valid);
        const auto m = wave_metrics(e.wave, d);
        ASSERT_EQ(m.height, e.height);
        ASSERT_GE(e.edge_height(), site_geometry(x, d).h);
        ASSERT_LE(m.time, static_cast<long long>(finder.flood_result().time_at(x)));
        for (const auto& drop : e.wave.droplets) ASSERT_TRUE(is_internally_spanned(drop, a));
        if (e.edge_anchored) {
            ++anchored;
            ASSERT_GE(m.height, site_geometry(x, d).h);
            ASSERT_TRUE(e.kind == WaveKind::up ? m.is_up : m.is_down);
        } else {
            ASSERT_TRUE(e.kind == WaveKind::up ? e.wave.front().b == d.b + 1 : e.wave.back().d == d.d - 1);
        }
        ++done;
    }
    EXPECT_EQ(done, 300);
    EXPECT_GT(anchored, 200);
}

TEST(Restrict, Examples) {
    const Wave singles{{Droplet::point({0, 0}), Droplet::point({2, 1}), Droplet::point({4, 2})}};
    const auto r = restrict_wave(singles, 4, 8.0);
    ASSERT_EQ(r.entries.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.entries[i].tag, CellTag::single);
        EXPECT_EQ(r.entries[i].droplet, singles.droplets[i]);
    }
    const auto rm = restricted_metrics(r);
    const auto wm = wave_metrics(singles, Droplet{0, 0, 9, 9});
    EXPECT_EQ(rm.height, wm.height);
    EXPECT_EQ(rm.time, wm.time);

    const Wave w{{Droplet::point({0, 0}), Droplet{2, 1, 3, 2}}};
    const auto s = restrict_wave(w, 4, 8.0);
    ASSERT_EQ(s.entries.size(), 2u);
    EXPECT_EQ(s.entries[0].tag, CellTag::single);
    EXPECT_EQ(s.entries[1].tag, CellTag::sigma_cell);
    EXPECT_EQ(s.entries[1].droplet, (Droplet{2, 1, 5, 4}));
    EXPECT_EQ(export_text(s), "SINGLE 0 0 0 0\nSIGMA_CELL 2 1 5 4\n");

    // phi = 7 >= sigma + 2 becomes a gamma-cell of side ceil(7.5) = 8.
    const auto g = restrict_wave(Wave{{Droplet{1, 1, 4, 3}}}, 4, 7.5);
    EXPECT_EQ(g.entries[0].tag, CellTag::gamma_cell);
    EXPECT_EQ(g.entries[0].droplet, (Droplet{1, 1, 8, 8}));

    EXPECT_THROW(restrict_wave(Wave{{Droplet{0, 0, 5, 5}}}, 4, 8.0), NotSubcritical);
}

TEST(Restrict, OverlappingCellsContributeNothing) {
    RestrictedWave r;
    r.entries = {{Droplet{0, 0, 9, 9}, CellTag::gamma_cell, 0}, {Droplet{3, 2, 12, 11}, CellTag::gamma_cell, 1}};
    EXPECT_EQ(restricted_metrics(r).time, 0);
    EXPECT_EQ(restricted_metrics(r).height, 12);
}

// Under the new-cell reading of the removal rule the time can go up.
TEST(Restrict, NewCellBoundsCanRaiseTime) {
    const Wave w{{Droplet{0, 0, 3, 0}, Droplet::point({10, 1}), Droplet{20, 3, 20, 4}}};
    ASSERT_TRUE(validate_wave(w).valid);
    EXPECT_EQ(wave_metrics(w, Droplet{0, 0, 30, 30}).time, 15);
    const auto literal = restrict_wave(w, 4, 30.0);
    EXPECT_TRUE(literal.removed.empty());
    EXPECT_EQ(restricted_metrics(literal).time, 15);
    const auto alt = restrict_wave(w, 4, 30.0, {RemovalBounds::new_cell, RemovalScope::all_indices});
    EXPECT_EQ(alt.removed, (std::vector<int>{1}));
    EXPECT_EQ(restricted_metrics(alt).time, 16);
}

TEST(Restrict, InvariantsOnExtractedWaves) {
    std::mt19937_64 rng(99);
    int waves = 0, cells = 0;
    for (int trial = 0; waves < 300 && trial < 5000; ++trial) {
        const double p = std::array{0.08, 0.12, 0.18}[std::size_t(trial % 3)];
        const GridConfig cfg(8 + int(rng() % 50), 8 + int(rng() % 80));
        const auto a = sample_initial(cfg, SimParams(p, 4242, std::uint64_t(trial)));
        const Droplet d = Droplet::of_grid(cfg);
        WaveFinder finder(d, a);
        std::vector<Site> eligible;
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x)
                if (finder.eligible({x, y})) eligible.push_back({x, y});
        if (eligible.empty()) continue;
        const auto w = finder.extract(eligible[rng() % eligible.size()]).wave;
        int maxphi = 0;
        for (const auto& x : w.droplets) maxphi = std::max(maxphi, x.phi());
        const int sigma = 1 + int(rng() % 6);
        const double gamma = double(maxphi) + double(rng() % 5) + 0.5;
        const auto r = restrict_wave(w, sigma, gamma);
        const auto wm = wave_metrics(w, d);
        const auto rm = restricted_metrics(r);
        ASSERT_GE(rm.height, wm.height);
        ASSERT_LE(rm.time, wm.time);
        ASSERT_FALSE(audit_restriction(w, r, a).has_value()) << *audit_restriction(w, r, a);
        for (const auto& e : r.entries) cells += e.tag != CellTag::single;
        ++waves;
    }
    EXPECT_EQ(waves, 300);
    EXPECT_GT(cells, 100);
}

TEST(Restrict, SerializationRoundTrip) {
    const Wave w{{Droplet{0, 0, 1, 1}, Droplet{3, 2, 4, 3}}};
    EXPECT_EQ(export_text(w), "DROPLET 0 0 1 1\nDROPLET 3 2 4 3\n");
    EXPECT_EQ(parse_wave(export_text(w)), w);
    EXPECT_THROW(parse_wave("DROPLET 0 0 x 1\n"), std::invalid_argument);
}
