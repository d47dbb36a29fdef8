#pragma once

// Counter-based randomness. Every site draw is a pure function of
// (seed, trial_index, site_index), so a trial can be regenerated on any
// worker, in any order, with identical bits.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "grid.hpp"

namespace bootperc {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used to fold experiment names into seeds.
constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

constexpr std::uint64_t site_hash(std::uint64_t seed, std::uint64_t trial, std::uint64_t site) {
    return hash_combine(hash_combine(splitmix64(seed), trial), site);
}

inline double site_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t site) {
    return to_unit(site_hash(seed, trial, site));
}

// Per-trial seed for a named experiment; independent of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment,
                                    std::uint64_t trial_index) {
    return hash_combine(hash_combine(master, hash_string(experiment)), trial_index);
}

struct SimParams {
    double p = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t trial_index = 0;

    SimParams() = default;
    SimParams(double p_, std::uint64_t seed_, std::uint64_t trial = 0)
        : p(p_), seed(seed_), trial_index(trial) {
        validate();
    }

    double q() const { return 1.0 - p; }

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("SimParams: p must lie in [0,1]");
    }
};

// Sites whose uniform draw falls below `threshold`, where site (x, y) takes
// the draw of index y * stride + x. With stride equal to the width this is
// the plain row-major layout; a fixed larger stride makes the grid the
// lower-left window of a bigger one, so growing windows are nested.
// Draws are shared across thresholds too, so thresholds p1 <= p2 give
// nested sets (a monotone coupling).
inline SiteSet sample_window(GridConfig cfg, std::uint64_t seed, std::uint64_t trial, double threshold,
                             std::uint64_t stride) {
    if (stride < std::uint64_t(cfg.width)) throw std::invalid_argument("sample_window: stride below the width");
    SiteSet s(cfg);
    if (threshold <= 0.0) return s;
    if (threshold >= 1.0) return SiteSet::full(cfg);
    const std::uint64_t base = splitmix64(seed);
    const std::uint64_t keyed = hash_combine(base, trial);
    // Compare integers: (h >> 11) < ceil(threshold * 2^53) is equivalent to
    // to_unit(h) < threshold and avoids a float conversion per site.
    const auto cut = std::uint64_t(std::ceil(threshold * 0x1.0p53));
    for (int y = 0; y < cfg.height; ++y) {
        auto r = s.row(y);
        std::uint64_t idx = std::uint64_t(y) * stride;
        for (int x = 0; x < cfg.width; ++x, ++idx) {
            if ((hash_combine(keyed, idx) >> 11) < cut) r[std::size_t(x >> 6)] |= std::uint64_t{1} << (x & 63);
        }
    }
    return s;
}

inline SiteSet sample_below(GridConfig cfg, std::uint64_t seed, std::uint64_t trial, double threshold) {
    return sample_window(cfg, seed, trial, threshold, std::uint64_t(cfg.width));
}

inline SiteSet sample_initial(GridConfig cfg, const SimParams& params) {
    params.validate();
    return sample_below(cfg, params.seed, params.trial_index, params.p);
}

}  // namespace bootperc
