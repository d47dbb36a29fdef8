#pragma once

// Waves: ordered droplet sequences climbing through a parent droplet, their
// metrics and crests, extraction from a flood, and the (1, sigma, gamma)
// restriction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "droplet.hpp"
#include "flood.hpp"
#include "grid.hpp"
#include "rectangles.hpp"

namespace bootperc {

struct Wave {
    std::vector<Droplet> droplets;

    std::size_t size() const { return droplets.size(); }
    const Droplet& front() const { return droplets.front(); }
    const Droplet& back() const { return droplets.back(); }
    bool operator==(const Wave&) const = default;
};

enum class WaveDefect { none, empty, overlap, not_closed, ordering };

inline const char* to_string(WaveDefect d) {
    switch (d) {
        case WaveDefect::none: return "none";
        case WaveDefect::empty: return "empty";
        case WaveDefect::overlap: return "droplets intersect";
        case WaveDefect::not_closed: return "union not closed";
        case WaveDefect::ordering: return "b_i < b_{i+1} <= d_i + 2 < d_{i+1} + 2 fails";
    }
    return "?";
}

struct WaveCheck {
    bool valid = false;
    WaveDefect defect = WaveDefect::empty;
    std::size_t index = 0;  // first offending droplet (or pair start)
};

// Conditions in order: pairwise disjoint, closed union, vertical ordering.
// Closedness is one bootstrap step on the union over its hull plus a
// one-site margin (nothing outside that margin can gain two neighbours).
inline WaveCheck validate_wave(const Wave& w) {
    if (w.droplets.empty()) return {false, WaveDefect::empty, 0};
    const auto& ds = w.droplets;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = i + 1; j < ds.size(); ++j)
            if (ds[i].intersects(ds[j])) return {false, WaveDefect::overlap, i};
    Droplet hull = ds[0];
    for (const auto& d : ds) hull = hull.hull(d);
    const Droplet box{hull.a - 1, hull.b - 1, hull.c + 1, hull.d + 1};
    SiteSet u(GridConfig(box.width(), box.height()));
    for (const auto& d : ds)
        for (int y = d.b; y <= d.d; ++y)
            for (int x = d.a; x <= d.c; ++x) u.set(x - box.a, y - box.b);
    if (!(step(u) == u)) return {false, WaveDefect::not_closed, 0};
    for (std::size_t i = 0; i + 1 < ds.size(); ++i) {
        const auto& p = ds[i];
        const auto& n = ds[i + 1];
        if (!(p.b < n.b && n.b <= p.d + 2 && p.d + 2 < n.d + 2)) return {false, WaveDefect::ordering, i};
    }
    return {true, WaveDefect::none, 0};
}

class InvalidWave : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Horizontal offset between consecutive droplets, max{a' - c, a - c'}.
inline int horizontal_offset(const Droplet& p, const Droplet& n) { return std::max(n.a - p.c, p.a - n.c); }

struct WaveMetrics {
    int height = 0;  // d_k - b_1 + 1
    long long time = 0;  // sum of (t_i - 1)
    std::vector<int> offsets;  // t_i
    Site anchor{};
    bool is_up = false;
    bool is_down = false;
};

inline WaveMetrics wave_metrics(const Wave& w, const Droplet& parent) {
    const auto chk = validate_wave(w);
    if (!chk.valid) throw InvalidWave(std::string("wave_metrics: ") + to_string(chk.defect));
    WaveMetrics m;
    m.height = w.back().d - w.front().b + 1;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        const int t = horizontal_offset(w.droplets[i], w.droplets[i + 1]);
        if (t <= 0) throw std::logic_error("wave_metrics: consecutive droplets overlap horizontally");
        m.offsets.push_back(t);
        m.time += t - 1;
    }
    m.anchor = {w.front().a, w.front().b};
    m.is_up = w.front().b == parent.b;
    m.is_down = w.back().d == parent.d;
    return m;
}

enum class CrestSide { upper, lower };

// t+(x, W) when x is in the upper crest, t-(x, W) for the lower crest;
// nullopt when x is not in that crest. Inside the horizontal span of the
// end droplet the extra term is 0, so the W-time is t(W).
inline std::optional<long long> crest_time(const Wave& w, const Droplet& parent, Site x, CrestSide side) {
    const auto m = wave_metrics(w, parent);
    if (!parent.contains(x)) return std::nullopt;
    const Droplet& end = side == CrestSide::upper ? w.back() : w.front();
    const bool band = side == CrestSide::upper ? (end.b - 1 <= x.y && x.y <= end.d) : (end.b <= x.y && x.y <= end.d + 1);
    if (!band || end.contains(x)) return std::nullopt;
    if (x.x >= end.a && x.x <= end.c) return m.time;
    return m.time + std::min(std::abs(x.x - end.c), std::abs(end.a - x.x));
}

enum class WaveKind { up, down };

struct ExtractedWave {
    Wave wave;
    WaveKind kind = WaveKind::up;
    // True when the end droplet sits on the parent's edge itself: a genuine
    // up- or down-wave. False when it starts one line inside; the edge line
    // under it then fills at time 1 from the ring, and height is counted
    // from the edge (wave height + 1). Some sites admit only this form.
    bool edge_anchored = true;
    std::uint32_t flood_time = 0;
    int site_height = 0;  // h(x)
    long long time = 0;
    int height = 0;  // d_k - b_1 + 1 of the returned wave

    int edge_height() const { return edge_anchored ? height : height + 1; }
};

class WaveExtractionFailure : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Wave search over the maximal droplets of [[D]]_0 (the final rectangles of
// A ∩ D). Those droplets are pairwise at distance >= 3, so every subset is
// disjoint and closed and only the ordering condition constrains a chain.
class WaveFinder {
public:
    WaveFinder(const Droplet& parent, const SiteSet& a)
        : parent_(parent), flood_(flood(parent, a)), finals_(rectangles_process(a, parent).final_droplets()) {
        std::sort(finals_.begin(), finals_.end(),
                  [](const Droplet& x, const Droplet& y) { return std::tie(x.b, x.d, x.a) < std::tie(y.b, y.d, y.a); });
        for (int start : {parent_.b, parent_.b + 1}) up_.push_back(chains_up(start));
        for (int end : {parent_.d, parent_.d - 1}) down_.push_back(chains_down(end));
    }

    const FloodResult& flood_result() const { return flood_; }
    const std::vector<Droplet>& maximal_droplets() const { return finals_; }

    // Precondition: 0 < flood time of x < w(x).
    bool eligible(Site x) const {
        if (!parent_.contains(x)) return false;
        const auto t = flood_.time_at(x);
        return t > 0 && int(t) < site_geometry(x, parent_).w;
    }

    // Minimum-time anchored wave with height >= h(x). Candidates anchored on
    // the edge itself are preferred; when none qualifies, a wave starting
    // one line inside is accepted if its height counted from the edge
    // reaches h(x). Ties go to smaller time, larger height, up
    // before down, and the lexicographically least droplet list.
    ExtractedWave extract(Site x) const {
        if (!parent_.contains(x)) throw std::invalid_argument("extract_wave: site outside the droplet");
        const auto geom = site_geometry(x, parent_);
        const auto t = flood_.time_at(x);
        if (!(t > 0 && int(t) < geom.w))
            throw std::invalid_argument("extract_wave: need 0 < flood time < w(x)");
        std::optional<ExtractedWave> best;
        auto better = [](const ExtractedWave& c, const ExtractedWave& b) {
            if (c.edge_anchored != b.edge_anchored) return c.edge_anchored;
            if (c.time != b.time) return c.time < b.time;
            if (c.height != b.height) return c.height > b.height;
            if (c.kind != b.kind) return c.kind == WaveKind::up;
            return c.wave.droplets < b.wave.droplets;
        };
        auto offer = [&](ExtractedWave c) {
            if (c.time > static_cast<long long>(t) || c.edge_height() < geom.h) return;
            if (!best || better(c, *best)) best = std::move(c);
        };
        for (std::size_t s = 0; s < up_.size(); ++s) {
            const auto& tab = up_[s];
            for (std::size_t j = 0; j < finals_.size(); ++j) {
                if (tab.cost[j] == inf) continue;
                ExtractedWave c;
                c.kind = WaveKind::up;
                c.edge_anchored = s == 0;
                c.wave = rebuild(tab, j, false);
                c.time = tab.cost[j];
                c.height = c.wave.back().d - c.wave.front().b + 1;
                offer(std::move(c));
            }
        }
        for (std::size_t s = 0; s < down_.size(); ++s) {
            const auto& tab = down_[s];
            for (std::size_t j = 0; j < finals_.size(); ++j) {
                if (tab.cost[j] == inf) continue;
                ExtractedWave c;
                c.kind = WaveKind::down;
                c.edge_anchored = s == 0;
                c.wave = rebuild(tab, j, true);
                c.time = tab.cost[j];
                c.height = c.wave.back().d - c.wave.front().b + 1;
                offer(std::move(c));
            }
        }
        if (!best) throw WaveExtractionFailure("extract_wave: no anchored wave of height >= h(x) and time <= t");
        best->flood_time = t;
        best->site_height = geom.h;
        const auto chk = validate_wave(best->wave);
        if (!chk.valid) throw WaveExtractionFailure(std::string("extract_wave: invalid wave: ") + to_string(chk.defect));
        const auto m = wave_metrics(best->wave, parent_);
        if (m.time != best->time || m.height != best->height || m.time > static_cast<long long>(t) ||
            best->edge_height() < geom.h)
            throw WaveExtractionFailure("extract_wave: postcondition failed");
        return *best;
    }

private:
    static constexpr long long inf = std::numeric_limits<long long>::max();

    struct Table {
        std::vector<long long> cost;
        std::vector<int> link;  // predecessor (up) or successor (down), -1 at the anchor
    };

    static bool follows(const Droplet& p, const Droplet& n) { return p.b < n.b && n.b <= p.d + 2 && p.d < n.d; }

    // cost[j]: least time of a chain whose first droplet starts at row
    // `start` and whose last droplet is finals_[j].
    Table chains_up(int start) const {
        const std::size_t n = finals_.size();
        Table t{std::vector<long long>(n, inf), std::vector<int>(n, -1)};
        for (std::size_t j = 0; j < n; ++j) {
            if (finals_[j].b == start) t.cost[j] = 0;
            for (std::size_t i = 0; i < j; ++i) {
                if (t.cost[i] == inf || !follows(finals_[i], finals_[j])) continue;
                const long long c = t.cost[i] + horizontal_offset(finals_[i], finals_[j]) - 1;
                if (c < t.cost[j]) {
                    t.cost[j] = c;
                    t.link[j] = int(i);
                }
            }
        }
        return t;
    }

    // cost[j]: least time of a chain starting at finals_[j] whose last
    // droplet ends at row `end`.
    Table chains_down(int end) const {
        const std::size_t n = finals_.size();
        Table t{std::vector<long long>(n, inf), std::vector<int>(n, -1)};
        for (std::size_t jj = n; jj-- > 0;) {
            if (finals_[jj].d == end) t.cost[jj] = 0;
            for (std::size_t k = jj + 1; k < n; ++k) {
                if (t.cost[k] == inf || !follows(finals_[jj], finals_[k])) continue;
                const long long c = t.cost[k] + horizontal_offset(finals_[jj], finals_[k]) - 1;
                if (c < t.cost[jj]) {
                    t.cost[jj] = c;
                    t.link[jj] = int(k);
                }
            }
        }
        return t;
    }

    Wave rebuild(const Table& t, std::size_t j, bool forward) const {
        Wave w;
        for (int i = int(j); i >= 0; i = t.link[std::size_t(i)]) w.droplets.push_back(finals_[std::size_t(i)]);
        if (!forward) std::reverse(w.droplets.begin(), w.droplets.end());
        return w;
    }

    Droplet parent_;
    FloodResult flood_;
    std::vector<Droplet> finals_;
    std::vector<Table> up_, down_;
};

inline ExtractedWave extract_wave(const Droplet& d, const SiteSet& a, Site x) { return WaveFinder(d, a).extract(x); }

enum class CellTag { single, sigma_cell, gamma_cell, original };

inline const char* to_string(CellTag t) {
    switch (t) {
        case CellTag::single: return "SINGLE";
        case CellTag::sigma_cell: return "SIGMA_CELL";
        case CellTag::gamma_cell: return "GAMMA_CELL";
        case CellTag::original: return "DROPLET";
    }
    return "?";
}

struct RestrictedEntry {
    Droplet droplet;
    CellTag tag = CellTag::single;
    int source = -1;  // index of the wave droplet it replaces or keeps

    bool operator==(const RestrictedEntry&) const = default;
};

struct RestrictedWave {
    std::vector<RestrictedEntry> entries;
    int sigma = 0;
    double gamma = 0.0;
    int gamma_side = 0;  // ceil(gamma)
    std::vector<int> removed;  // wave indices dropped by the removal rule
};

// Which rows bound the removal rule. The rule names the replaced droplet's
// own b and d; the alternative uses the rows of the new cell.
enum class RemovalBounds { replaced_droplet, new_cell };
enum class RemovalScope { all_indices, later_indices };

struct RestrictOptions {
    RemovalBounds bounds = RemovalBounds::replaced_droplet;
    RemovalScope scope = RemovalScope::all_indices;
};

class NotSubcritical : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline RestrictedWave restrict_wave(const Wave& w, int sigma, double gamma, RestrictOptions opts = {}) {
    if (sigma < 1) throw std::invalid_argument("restrict_wave: sigma must be positive");
    const int gside = int(std::ceil(gamma * (1.0 - CriticalParams::rel_slack)));
    for (const auto& d : w.droplets)
        if (double(d.phi()) > gamma * (1.0 + CriticalParams::rel_slack))
            throw NotSubcritical("restrict_wave: wave has a droplet with phi > gamma");
    RestrictedWave out;
    out.sigma = sigma;
    out.gamma = gamma;
    out.gamma_side = gside;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto& d = w.droplets[i];
        out.entries.push_back({d, d.phi() == 2 ? CellTag::single : CellTag::original, int(i)});
    }
    auto pass = [&](int lo, int hi, int side, CellTag tag) {
        for (;;) {
            std::size_t i = 0;
            while (i < out.entries.size() &&
                   !(out.entries[i].tag == CellTag::original && out.entries[i].droplet.phi() >= lo &&
                     out.entries[i].droplet.phi() <= hi))
                ++i;
            if (i == out.entries.size()) return;
            const Droplet old = out.entries[i].droplet;
            const Droplet cell = Droplet::cell(old.a, old.b, side);
            out.entries[i].droplet = cell;
            out.entries[i].tag = tag;
            const int rb = opts.bounds == RemovalBounds::replaced_droplet ? old.b : cell.b;
            const int rd = opts.bounds == RemovalBounds::replaced_droplet ? old.d : cell.d;
            std::vector<RestrictedEntry> kept;
            for (std::size_t j = 0; j < out.entries.size(); ++j) {
                const auto& e = out.entries[j];
                const bool in_scope = j != i && (opts.scope == RemovalScope::all_indices || j > i);
                if (in_scope && e.droplet.b >= rb && e.droplet.d <= rd) {
                    out.removed.push_back(e.source);
                    continue;
                }
                kept.push_back(e);
            }
            out.entries = std::move(kept);
        }
    };
    pass(sigma + 2, int(std::floor(gamma * (1.0 + CriticalParams::rel_slack))), gside, CellTag::gamma_cell);
    pass(3, sigma + 1, sigma, CellTag::sigma_cell);
    for (const auto& e : out.entries)
        if (e.tag == CellTag::original) throw std::logic_error("restrict_wave: droplet left unreplaced");
    std::sort(out.removed.begin(), out.removed.end());
    return out;
}

struct RestrictedMetrics {
    int height = 0;
    long long time = 0;
};

// t_i' = max{a_{i+1}' - c_i', a_i' - c_{i+1}', 1}; time sums t_i' - 1 over
// consecutive pairs, so overlapping cells contribute nothing.
inline RestrictedMetrics restricted_metrics(const RestrictedWave& w) {
    if (w.entries.empty()) throw std::invalid_argument("restricted_metrics: empty restriction");
    RestrictedMetrics m;
    m.height = w.entries.back().droplet.d - w.entries.front().droplet.b + 1;
    for (std::size_t i = 0; i + 1 < w.entries.size(); ++i) {
        const int t = std::max(horizontal_offset(w.entries[i].droplet, w.entries[i + 1].droplet), 1);
        m.time += t - 1;
    }
    return m;
}

// Internally spanned witnesses for each restricted entry: the wave droplet
// it came from. Reports the first problem found, or nullopt.
inline std::optional<std::string> audit_restriction(const Wave& w, const RestrictedWave& r, const SiteSet& a) {
    std::vector<Droplet> witnesses;
    for (const auto& e : r.entries) {
        if (e.source < 0 || std::size_t(e.source) >= w.size()) return "entry without a source droplet";
        const Droplet src = w.droplets[std::size_t(e.source)];
        if (!e.droplet.contains(src)) return "source droplet not inside its replacement";
        if (!is_internally_spanned(src, a)) return "witness not internally spanned";
        const int phi = src.phi();
        switch (e.tag) {
            case CellTag::single:
                if (phi != 2) return "SINGLE entry is not a single site";
                break;
            case CellTag::sigma_cell:
                if (phi < 3 || phi > r.sigma + 1) return "SIGMA_CELL witness outside [3, sigma+1]";
                break;
            case CellTag::gamma_cell:
                if (phi < r.sigma + 2 || double(phi) > r.gamma * (1.0 + CriticalParams::rel_slack))
                    return "GAMMA_CELL witness outside [sigma+2, gamma]";
                break;
            case CellTag::original: return "unreplaced entry";
        }
        witnesses.push_back(src);
    }
    for (std::size_t i = 0; i < witnesses.size(); ++i)
        for (std::size_t j = i + 1; j < witnesses.size(); ++j)
            if (witnesses[i].intersects(witnesses[j])) return "witnesses intersect";
    return std::nullopt;
}

inline std::string export_text(const Wave& w) {
    std::ostringstream os;
    for (const auto& d : w.droplets) os << "DROPLET " << d.a << ' ' << d.b << ' ' << d.c << ' ' << d.d << '\n';
    return os.str();
}

inline std::string export_text(const RestrictedWave& w) {
    std::ostringstream os;
    for (const auto& e : w.entries)
        os << to_string(e.tag) << ' ' << e.droplet.a << ' ' << e.droplet.b << ' ' << e.droplet.c << ' ' << e.droplet.d
           << '\n';
    return os.str();
}

inline Wave parse_wave(const std::string& text) {
    std::istringstream is(text);
    Wave w;
    std::string tag;
    int a, b, c, d;
    while (is >> tag >> a >> b >> c >> d) w.droplets.emplace_back(a, b, c, d);
    if (!is.eof()) throw std::invalid_argument("parse_wave: malformed line");
    return w;
}

}  // namespace bootperc
