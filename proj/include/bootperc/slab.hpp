#pragma once

// Slow/fast verdicts for M-slabs: droplets with long side M/p and short
// side M.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "cells.hpp"
#include "droplet.hpp"
#include "flood.hpp"
#include "rectangles.hpp"

namespace bootperc {

struct SlabVerdict {
    // No internally spanned droplet inside D has phi > gamma.
    bool subcritical = false;
    // Some internally spanned droplet inside D has gamma/2 <= phi <= gamma.
    bool gamma_event = false;
    int max_phi = 0;  // largest phi among the maximal spanned droplets
    bool fast = false;
    std::uint32_t flood_total = 0;
    std::uint32_t threshold = 0;
};

struct SlabShape {
    int long_side = 0;
    int short_side = 0;
};

inline SlabShape slab_shape(double M, double p) {
    if (!(M >= 1.0) || !(p > 0.0 && p < 1.0)) throw std::invalid_argument("slab_shape: need M >= 1 and p in (0,1)");
    return {int(std::lround(M / p)), int(std::lround(M))};
}

inline std::uint32_t slab_threshold(double M, double p, const ScaleParams& params) {
    return std::uint32_t(std::floor(params.c_slow * M / p));
}

// Every internally spanned droplet sits inside a final droplet of the
// rectangles process run on D, and finals are internally spanned, so the
// largest phi over finals decides subcriticality exactly.
inline SlabVerdict classify_slab(const Droplet& d, const SiteSet& a, double p, const ScaleParams& params, double M,
                                 const CriticalParams& criticals) {
    params.validate();
    const auto shape = slab_shape(M, p);
    if (d.lg() != shape.long_side || d.sh() != shape.short_side)
        throw std::invalid_argument("classify_slab: droplet is not an M-slab for this M and p");
    if (!d.inside(a.config())) throw std::out_of_range("classify_slab: slab leaves the grid");
    SlabVerdict v;
    const auto trace = rectangles_process(a, d);
    for (const auto& f : trace.final_droplets()) v.max_phi = std::max(v.max_phi, f.phi());
    v.subcritical = double(v.max_phi) <= criticals.window_hi();
    v.gamma_event = criticals.gamma >= 2.0 && find_critical_node(trace, criticals).has_value();
    v.flood_total = flood(d, a).total;
    v.threshold = slab_threshold(M, p, params);
    v.fast = v.flood_total <= v.threshold;
    return v;
}

inline SlabVerdict classify_slab(const Droplet& d, const SiteSet& a, double p, const ScaleParams& params, double M) {
    return classify_slab(d, a, p, params, M, CriticalParams(p));
}

}  // namespace bootperc
