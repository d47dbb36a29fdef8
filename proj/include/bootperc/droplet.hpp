#pragma once

// Axis-aligned integer rectangles ("droplets"). D = [(a,b),(c,d)] covers
// columns a..c and rows b..d inclusive.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "grid.hpp"

namespace bootperc {

struct Droplet {
    int a = 0;
    int b = 0;
    int c = 0;
    int d = 0;

    Droplet() = default;
    constexpr Droplet(int a_, int b_, int c_, int d_) : a(a_), b(b_), c(c_), d(d_) {
        if (a > c || b > d) throw std::invalid_argument("Droplet: need a <= c and b <= d");
    }

    static constexpr Droplet point(Site s) { return {s.x, s.y, s.x, s.y}; }
    static Droplet of_grid(const GridConfig& cfg) { return {0, 0, cfg.width - 1, cfg.height - 1}; }
    // Square m x m droplet with lower-left corner (x, y).
    static constexpr Droplet cell(int x, int y, int m) { return {x, y, x + m - 1, y + m - 1}; }

    constexpr int width() const { return c - a + 1; }
    constexpr int height() const { return d - b + 1; }
    constexpr int lg() const { return std::max(width(), height()); }
    constexpr int sh() const { return std::min(width(), height()); }
    constexpr int phi() const { return width() + height(); }
    constexpr std::int64_t area() const { return std::int64_t(width()) * height(); }

    constexpr bool contains(int x, int y) const { return x >= a && x <= c && y >= b && y <= d; }
    constexpr bool contains(Site s) const { return contains(s.x, s.y); }
    constexpr bool contains(const Droplet& o) const { return o.a >= a && o.c <= c && o.b >= b && o.d <= d; }
    constexpr bool intersects(const Droplet& o) const { return a <= o.c && o.a <= c && b <= o.d && o.b <= d; }
    bool inside(const GridConfig& cfg) const { return a >= 0 && b >= 0 && c < cfg.width && d < cfg.height; }

    // l1 distance between the closest pair of sites, 0 when they intersect.
    constexpr int distance(const Droplet& o) const {
        const int dx = std::max({0, o.a - c, a - o.c});
        const int dy = std::max({0, o.b - d, b - o.d});
        return dx + dy;
    }

    // Smallest droplet containing both.
    constexpr Droplet hull(const Droplet& o) const {
        return {std::min(a, o.a), std::min(b, o.b), std::max(c, o.c), std::max(d, o.d)};
    }

    std::optional<Droplet> intersection(const Droplet& o) const {
        if (!intersects(o)) return std::nullopt;
        return Droplet{std::max(a, o.a), std::max(b, o.b), std::min(c, o.c), std::min(d, o.d)};
    }

    // Clip to the grid; nullopt when nothing is left.
    std::optional<Droplet> clip(const GridConfig& cfg) const { return intersection(of_grid(cfg)); }

    bool operator==(const Droplet&) const = default;
    auto operator<=>(const Droplet&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Droplet& d) {
    return os << "[(" << d.a << ',' << d.b << "),(" << d.c << ',' << d.d << ")]";
}

inline std::string to_string(const Droplet& d) {
    return "[(" + std::to_string(d.a) + "," + std::to_string(d.b) + "),(" + std::to_string(d.c) + "," +
           std::to_string(d.d) + ")]";
}

// Interior [(a+1,b+1),(c-1,d-1)], defined when both sides are at least 3.
inline std::optional<Droplet> interior(const Droplet& d) {
    if (d.width() < 3 || d.height() < 3) return std::nullopt;
    return Droplet{d.a + 1, d.b + 1, d.c - 1, d.d - 1};
}

struct Edges {
    Droplet left, right, bottom, top;
};

inline Edges edges(const Droplet& d) {
    return {{d.a, d.b, d.a, d.d}, {d.c, d.b, d.c, d.d}, {d.a, d.b, d.c, d.b}, {d.a, d.d, d.c, d.d}};
}

// The four 2 x (m-2) rectangles straddling the edges of an m-cell, m >= 3.
// Each buffer holds one line of the cell and one line just outside it.
struct Buffers {
    Droplet left, right, bottom, top;
};

class NotApplicable : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline Buffers buffers(const Droplet& d) {
    if (d.width() != d.height() || d.width() < 3)
        throw NotApplicable("buffers need a square droplet with side at least 3");
    return {{d.a - 1, d.b + 1, d.a, d.d - 1},
            {d.c, d.b + 1, d.c + 1, d.d - 1},
            {d.a + 1, d.b - 1, d.c - 1, d.b},
            {d.a + 1, d.d, d.c - 1, d.d + 1}};
}

// Number of sites of `s` inside `d` (clipped to the grid).
inline std::size_t count_in(const SiteSet& s, const Droplet& d) {
    const auto clipped = d.clip(s.config());
    if (!clipped) return 0;
    std::size_t n = 0;
    for (int y = clipped->b; y <= clipped->d; ++y)
        for (int x = clipped->a; x <= clipped->c; ++x) n += s.test(x, y);
    return n;
}

inline bool all_set_in(const SiteSet& s, const Droplet& d) {
    for (int y = d.b; y <= d.d; ++y)
        for (int x = d.a; x <= d.c; ++x)
            if (!s.test_or_empty(x, y)) return false;
    return true;
}

inline bool none_set_in(const SiteSet& s, const Droplet& d) { return count_in(s, d) == 0; }

// A ∩ D as a standalone grid of D's dimensions; site (x, y) of the result is
// site (x + a, y + b) of the original. Parts of D off the grid read empty.
inline SiteSet restrict_to(const SiteSet& s, const Droplet& d) {
    SiteSet out(GridConfig(d.width(), d.height()));
    const auto clipped = d.clip(s.config());
    if (!clipped) return out;
    for (int y = clipped->b; y <= clipped->d; ++y)
        for (int x = clipped->a; x <= clipped->c; ++x)
            if (s.test(x, y)) out.set(x - d.a, y - d.b);
    return out;
}

// Sites of `d` as a SiteSet on `cfg`.
inline SiteSet fill(const GridConfig& cfg, const Droplet& d) {
    SiteSet out(cfg);
    const auto clipped = d.clip(cfg);
    if (!clipped) return out;
    for (int y = clipped->b; y <= clipped->d; ++y)
        for (int x = clipped->a; x <= clipped->c; ++x) out.set(x, y);
    return out;
}

}  // namespace bootperc
