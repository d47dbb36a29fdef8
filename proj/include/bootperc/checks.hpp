#pragma once

// Per-sample invariant checks shared by the runner and the acceptance
// binary. Each compares two independent routes or audits a construction
// against its definition; none of them is statistical.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "droplet.hpp"
#include "flood.hpp"
#include "grid.hpp"
#include "random.hpp"
#include "rectangles.hpp"
#include "waves.hpp"

namespace bootperc {

struct ClosureCheck {
    std::size_t occupied = 0;
    std::size_t closure_size = 0;
    std::size_t finals = 0;
    std::size_t nodes = 0;
    bool percolated = false;
    bool equal = false;   // union of final droplets == closure by iteration
    bool phi_ok = false;  // 2 |A ∩ D| >= phi(D) at every trace node
};

inline ClosureCheck closure_check(const SiteSet& a) {
    ClosureCheck c;
    c.occupied = a.count();
    const auto run = evolve(a);
    c.closure_size = run.closure.count();
    c.percolated = run.percolated();
    const auto trace = rectangles_process(a);
    c.finals = trace.finals.size();
    c.nodes = trace.nodes.size();
    c.equal = union_of_finals(trace, a.config()) == run.closure;
    c.phi_ok = std::all_of(trace.nodes.begin(), trace.nodes.end(), [&](const TraceNode& n) {
        return 2 * count_in(a, n.droplet) >= std::size_t(n.droplet.phi());
    });
    return c;
}

// First t at which A_t ∩ D is not inside [[D]]_t, if any. Past the flood
// total [[D]]_t is all of D, so t runs to that point only.
inline std::optional<std::uint32_t> flood_containment_violation(const Droplet& d, const SiteSet& a) {
    const auto f = flood(d, a);
    SiteSet state = a, scratch(a.config());
    for (std::uint32_t t = 0; t <= f.total; ++t) {
        const auto lvl = f.level(t);
        for (int y = d.b; y <= d.d; ++y)
            for (int x = d.a; x <= d.c; ++x)
                if (state.test(x, y) && !lvl.test(x - d.a, y - d.b)) return t;
        step_in_place(state, scratch);
    }
    return std::nullopt;
}

inline Droplet random_droplet_in(const GridConfig& cfg, std::mt19937_64& rng) {
    const int x0 = int(rng() % std::uint64_t(cfg.width)), x1 = int(rng() % std::uint64_t(cfg.width));
    const int y0 = int(rng() % std::uint64_t(cfg.height)), y1 = int(rng() % std::uint64_t(cfg.height));
    return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

// Restriction invariants: heights do not drop, times do not grow, and
// the witness audit finds disjoint internally spanned witnesses.
struct RestrictionCheck {
    int sigma = 0;
    double gamma = 0.0;
    std::size_t cells = 0;  // entries that are not single sites
    bool height_ok = false;
    bool time_ok = false;
    std::optional<std::string> audit;  // first audit failure

    bool ok() const { return height_ok && time_ok && !audit; }
};

inline RestrictionCheck restriction_check(const Wave& w, const Droplet& parent, const SiteSet& a, int sigma,
                                          double gamma) {
    RestrictionCheck c;
    c.sigma = sigma;
    c.gamma = gamma;
    const auto r = restrict_wave(w, sigma, gamma);
    const auto wm = wave_metrics(w, parent);
    const auto rm = restricted_metrics(r);
    c.height_ok = rm.height >= wm.height;
    c.time_ok = rm.time <= wm.time;
    c.audit = audit_restriction(w, r, a);
    for (const auto& e : r.entries) c.cells += e.tag != CellTag::single;
    return c;
}

// One sampled droplet for the wave checks: the droplet is the whole grid,
// its sides drawn from the case seed, A sampled at p.
struct WaveCase {
    std::uint64_t seed = 0;
    double p = 0.0;
    Droplet droplet;
    bool subcritical = false;  // no final droplet of the rectangles process above gamma
    std::size_t eligible = 0;
    std::optional<Site> site;  // the sampled eligible site
    bool strict = false;        // a genuine up- or down-wave was found
    int wave_height = 0;        // edge height for the fallback
    int site_height = 0;
    long long wave_time = 0;
    std::uint32_t flood_time = 0;
    std::size_t wave_length = 0;
    std::optional<std::string> failure;  // hard assertion that did not hold
    std::vector<RestrictionCheck> restrictions;
};

inline WaveCase wave_case(std::uint64_t seed, double p, int max_width, int max_height, int sigma) {
    WaveCase c;
    c.seed = seed;
    c.p = p;
    std::mt19937_64 rng(seed);
    const GridConfig cfg(4 + int(rng() % std::uint64_t(max_width - 3)), 4 + int(rng() % std::uint64_t(max_height - 3)));
    const auto a = sample_below(cfg, seed, 0, p);
    const Droplet d = Droplet::of_grid(cfg);
    c.droplet = d;
    const CriticalParams cp(p);
    int max_phi = 0;
    for (const auto& f : rectangles_process(a).final_droplets()) max_phi = std::max(max_phi, f.phi());
    c.subcritical = max_phi <= cp.window_hi();
    WaveFinder finder(d, a);
    std::vector<Site> eligible;
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x)
            if (finder.eligible({x, y})) eligible.push_back({x, y});
    c.eligible = eligible.size();
    if (eligible.empty()) return c;
    const Site x = eligible[rng() % eligible.size()];
    c.site = x;
    c.site_height = site_geometry(x, d).h;
    c.flood_time = finder.flood_result().time_at(x);
    try {
        const auto e = finder.extract(x);
        c.strict = e.edge_anchored;
        c.wave_height = e.edge_height();
        c.wave_length = e.wave.size();
        const auto m = wave_metrics(e.wave, d);
        c.wave_time = m.time;
        if (!validate_wave(e.wave).valid) c.failure = "extracted wave is not a wave";
        else if (m.time > (long long)c.flood_time) c.failure = "wave time exceeds flood time";
        else if (c.wave_height < c.site_height) c.failure = "wave height below h(x)";
        else if (c.strict && !(e.kind == WaveKind::up ? m.is_up : m.is_down)) c.failure = "wave kind mismatch";
        if (c.failure) return c;
        int wave_phi = 0;
        for (const auto& drop : e.wave.droplets) wave_phi = std::max(wave_phi, drop.phi());
        // The scale's own constants, then small ones that force cells of both kinds.
        if (c.subcritical) c.restrictions.push_back(restriction_check(e.wave, d, a, sigma, cp.gamma));
        const int small_sigma = 1 + int(rng() % 6);
        const double small_gamma = double(wave_phi) + double(rng() % 5) + 0.5;
        c.restrictions.push_back(restriction_check(e.wave, d, a, small_sigma, small_gamma));
    } catch (const std::logic_error& err) {
        c.failure = err.what();
    }
    return c;
}

}  // namespace bootperc
