#pragma once

// Floods: the closure of A ∩ D evolved together with a fully infected ring
// of sites around D. The ring is virtual; the computation runs on a local
// grid one site larger on every side whose border plays the ring.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

#include "droplet.hpp"
#include "grid.hpp"

namespace bootperc {

struct FloodResult {
    Droplet droplet;
    // Local field on D's own dimensions: site (x, y) of D is (x - a, y - b).
    InfectionField times;
    std::uint32_t total = 0;
    SiteSet initial;  // [[D]]_0 in local coordinates

    std::uint32_t time_at(Site s) const {
        if (!droplet.contains(s)) throw std::out_of_range("FloodResult: site outside the droplet");
        return times.at(s.x - droplet.a, s.y - droplet.b);
    }
    bool in_initial(Site s) const { return droplet.contains(s) && initial.test(s.x - droplet.a, s.y - droplet.b); }
    // [[D]]_t in local coordinates.
    SiteSet level(std::uint32_t t) const { return times.level_set(t); }
};

inline FloodResult flood(const Droplet& d, const SiteSet& a) {
    const int w = d.width(), h = d.height();
    const SiteSet inner = evolve(restrict_to(a, d)).closure;
    SiteSet padded(GridConfig(w + 2, h + 2));
    for (int x = 0; x < w + 2; ++x) {
        padded.set(x, 0);
        padded.set(x, h + 1);
    }
    for (int y = 0; y < h + 2; ++y) {
        padded.set(0, y);
        padded.set(w + 1, y);
    }
    for (const auto& s : inner.sites()) padded.set(s.x + 1, s.y + 1);
    const auto run = evolve(padded, {.track_times = true});
    FloodResult r{d, InfectionField(GridConfig(w, h)), 0, inner};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto t = run.field->at(x + 1, y + 1);
            if (t == InfectionField::NEVER) throw std::logic_error("flood: site never infected despite the ring");
            r.times.assign(x, y, t);
            r.total = std::max(r.total, t);
        }
    return r;
}

enum class Wake { down, up, left, right };

struct SiteGeometry {
    Site x;
    Droplet parent;
    int w = 0;  // min{c - x1, x1 - a} + 1
    int h = 0;  // min{d - x2, x2 - b} + 1

    // 45-degree pyramid of sites of the parent with apex x, pointing away
    // from the named side.
    bool in_wake(Wake k, Site y) const {
        if (!parent.contains(y)) return false;
        switch (k) {
            case Wake::down: return std::abs(y.x - x.x) + y.y <= x.y;
            case Wake::up: return std::abs(y.x - x.x) + x.y <= y.y;
            case Wake::left: return std::abs(y.y - x.y) + y.x <= x.x;
            case Wake::right: return std::abs(y.y - x.y) + x.x <= y.x;
        }
        return false;
    }
};

inline SiteGeometry site_geometry(Site x, const Droplet& d) {
    if (!d.contains(x)) throw std::out_of_range("site_geometry: site outside the droplet");
    return {x, d, std::min(d.c - x.x, x.x - d.a) + 1, std::min(d.d - x.y, x.y - d.b) + 1};
}

}  // namespace bootperc
