#pragma once

// The rectangles process: start from one droplet per occupied site and keep
// replacing two droplets that come within l1 distance 2 by their hull. The
// final droplets tile the closure [A]. Every intermediate droplet is
// recorded in a MergeTrace together with its two parents.
//
// Merge order is fixed so traces are reproducible: active droplets wait in a
// queue ordered by (b, a, d, c, id); the lowest one scans the ring of sites
// within distance 2 and absorbs its partners in the same order. If a hull
// overlaps a further droplet, that droplet is absorbed immediately, so
// active droplets stay pairwise disjoint.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "droplet.hpp"
#include "grid.hpp"

namespace bootperc {

struct TraceNode {
    Droplet droplet;
    int parent1 = -1;  // -1 for a leaf
    int parent2 = -1;

    bool leaf() const { return parent1 < 0; }
    bool operator==(const TraceNode&) const = default;
};

struct MergeTrace {
    std::vector<TraceNode> nodes;
    std::vector<int> finals;  // sorted by (b, a, d, c)

    std::vector<Droplet> final_droplets() const {
        std::vector<Droplet> out;
        out.reserve(finals.size());
        for (int i : finals) out.push_back(nodes[std::size_t(i)].droplet);
        return out;
    }

    // One node per line: "id a b c d parent1 parent2".
    std::string export_text() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            os << i << ' ' << n.droplet.a << ' ' << n.droplet.b << ' ' << n.droplet.c << ' ' << n.droplet.d
               << ' ' << n.parent1 << ' ' << n.parent2 << '\n';
        }
        return os.str();
    }
};

namespace detail {

class RectanglesRun {
public:
    RectanglesRun(const SiteSet& a, const Droplet& window)
        : win_(window),
          w_(window.width()),
          owner_(std::size_t(window.area()), -1) {
        const auto clipped = window.clip(a.config());
        if (!clipped) return;
        for (int y = clipped->b; y <= clipped->d; ++y) {
            const auto row = a.row(y);
            for (int x = clipped->a; x <= clipped->c; ++x) {
                if (!((row[std::size_t(x >> 6)] >> (x & 63)) & 1u)) continue;
                const int id = add_node({Droplet::point({x, y}), -1, -1});
                owner_[slot(x, y)] = id;
                push(id);
            }
        }
    }

    MergeTrace run() {
        while (!queue_.empty()) {
            const auto [key, id] = queue_.top();
            queue_.pop();
            if (!active_[std::size_t(id)]) continue;
            settle(id);
        }
        MergeTrace out;
        out.nodes = std::move(nodes_);
        for (std::size_t i = 0; i < active_.size(); ++i)
            if (active_[i]) out.finals.push_back(int(i));
        std::sort(out.finals.begin(), out.finals.end(), [&](int x, int y) {
            return order_key(out.nodes[std::size_t(x)].droplet, x) < order_key(out.nodes[std::size_t(y)].droplet, y);
        });
        return out;
    }

private:
    using Key = std::tuple<int, int, int, int, int>;

    static Key order_key(const Droplet& d, int id) { return {d.b, d.a, d.d, d.c, id}; }

    std::size_t slot(int x, int y) const { return std::size_t(y - win_.b) * std::size_t(w_) + std::size_t(x - win_.a); }

    int add_node(TraceNode n) {
        nodes_.push_back(n);
        active_.push_back(true);
        parent_.push_back(int(parent_.size()));
        return int(nodes_.size()) - 1;
    }

    void push(int id) { queue_.push({order_key(nodes_[std::size_t(id)].droplet, id), id}); }

    int find(int id) {
        while (parent_[std::size_t(id)] != id) {
            parent_[std::size_t(id)] = parent_[std::size_t(parent_[std::size_t(id)])];
            id = parent_[std::size_t(id)];
        }
        return id;
    }

    int owner_root(int x, int y) {
        const int o = owner_[slot(x, y)];
        return o < 0 ? -1 : find(o);
    }

    // Merge active droplets u and v into a new node; returns its id. Sites
    // of the hull outside both parents are claimed, and any other active
    // droplet met there is absorbed as well.
    int merge(int u, int v) {
        struct Region {
            Droplet hull, ex1, ex2;
        };
        std::vector<Region> pending;
        int cur = join(u, v);
        pending.push_back({nodes_[std::size_t(cur)].droplet, nodes_[std::size_t(u)].droplet,
                           nodes_[std::size_t(v)].droplet});
        std::vector<int> met;
        for (std::size_t r = 0; r < pending.size(); ++r) {
            const Region reg = pending[r];
            met.clear();
            for (int y = reg.hull.b; y <= reg.hull.d; ++y) {
                // Skip each parent's run on this row instead of testing every
                // site; a big droplet absorbing a point touches O(height) sites.
                const bool in1 = y >= reg.ex1.b && y <= reg.ex1.d, in2 = y >= reg.ex2.b && y <= reg.ex2.d;
                for (int x = reg.hull.a; x <= reg.hull.c; ++x) {
                    if (in1 && x >= reg.ex1.a && x <= reg.ex1.c) {
                        x = reg.ex1.c;
                        continue;
                    }
                    if (in2 && x >= reg.ex2.a && x <= reg.ex2.c) {
                        x = reg.ex2.c;
                        continue;
                    }
                    auto& o = owner_[slot(x, y)];
                    if (o < 0) {
                        o = cur;
                        continue;
                    }
                    const int root = find(o);
                    if (root != find(cur)) met.push_back(root);
                }
            }
            sort_by_key(met);
            for (int f : met) {
                if (!active_[std::size_t(f)] || find(f) == find(cur)) continue;
                const Droplet prev = nodes_[std::size_t(cur)].droplet;
                const Droplet other = nodes_[std::size_t(f)].droplet;
                cur = join(cur, f);
                pending.push_back({nodes_[std::size_t(cur)].droplet, prev, other});
            }
        }
        return cur;
    }

    int join(int u, int v) {
        const Droplet h = nodes_[std::size_t(u)].droplet.hull(nodes_[std::size_t(v)].droplet);
        const int id = add_node({h, u, v});
        active_[std::size_t(u)] = false;
        active_[std::size_t(v)] = false;
        parent_[std::size_t(u)] = id;
        parent_[std::size_t(v)] = id;
        return id;
    }

    void sort_by_key(std::vector<int>& ids) {
        std::sort(ids.begin(), ids.end(), [&](int x, int y) {
            return order_key(nodes_[std::size_t(x)].droplet, x) < order_key(nodes_[std::size_t(y)].droplet, y);
        });
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }

    // Active droplets (other than `id`) with a site within distance 2.
    std::vector<int> partners(int id) {
        const Droplet d = nodes_[std::size_t(id)].droplet;
        std::vector<int> found;
        for (int y = std::max(d.b - 2, win_.b); y <= std::min(d.d + 2, win_.d); ++y) {
            const int dy = y < d.b ? d.b - y : (y > d.d ? y - d.d : 0);
            const int reach = 2 - dy;
            const int x0 = std::max(d.a - reach, win_.a), x1 = std::min(d.c + reach, win_.c);
            for (int x = x0; x <= x1; ++x) {
                if (dy == 0 && x >= d.a && x <= d.c) {
                    x = d.c;
                    continue;
                }
                const int root = owner_root(x, y);
                if (root >= 0 && root != id) found.push_back(root);
            }
        }
        sort_by_key(found);
        return found;
    }

    void settle(int id) {
        int cur = id;
        bool grew = false;
        for (;;) {
            const auto ps = partners(cur);
            if (ps.empty()) break;
            for (int f : ps) {
                if (!active_[std::size_t(f)] || find(f) == find(cur)) continue;
                cur = merge(cur, f);
                grew = true;
            }
        }
        if (grew) push(cur);
    }

    Droplet win_;
    int w_;
    std::vector<int> owner_;
    std::vector<TraceNode> nodes_;
    std::vector<bool> active_;
    std::vector<int> parent_;
    std::priority_queue<std::pair<Key, int>, std::vector<std::pair<Key, int>>, std::greater<>> queue_;
};

}  // namespace detail

// Runs the process on A ∩ X. Droplets never leave the hull of their sites,
// so this is also the process on A ∩ X inside X alone.
inline MergeTrace rectangles_process(const SiteSet& a, const Droplet& window) {
    return detail::RectanglesRun(a, window).run();
}

inline MergeTrace rectangles_process(const SiteSet& a) {
    return rectangles_process(a, Droplet::of_grid(a.config()));
}

inline SiteSet union_of_finals(const MergeTrace& trace, const GridConfig& cfg) {
    SiteSet out(cfg);
    for (int i : trace.finals) out |= fill(cfg, trace.nodes[std::size_t(i)].droplet);
    return out;
}

// Closure of A ∩ D computed inside D covers D.
inline bool is_internally_spanned(const Droplet& d, const SiteSet& a) {
    if (!d.inside(a.config())) throw std::out_of_range("is_internally_spanned: droplet leaves the grid");
    return evolve(restrict_to(a, d)).closure.is_full();
}

// I_t(D): [A ∩ D]_t = D.
inline bool is_spanned_by_time(const Droplet& d, const SiteSet& a, std::uint32_t t) {
    if (!d.inside(a.config())) throw std::out_of_range("is_spanned_by_time: droplet leaves the grid");
    return evolve_to(restrict_to(a, d), t).is_full();
}

class WindowEmpty : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct CriticalParams {
    double p = 0.1;
    double gamma = 1000.0;

    CriticalParams() = default;
    explicit CriticalParams(double p_) : p(p_), gamma(std::pow(p_, -3.0)) {
        if (!(p_ > 0.0 && p_ <= 1.0)) throw std::invalid_argument("CriticalParams: p must lie in (0,1]");
    }

    // phi is critical when gamma/2 <= phi <= gamma. A relative slack of
    // 1e-12 absorbs the rounding of decimal p (0.2 as a double gives
    // gamma = 124.99999999999997); it never moves an integer across the
    // bound otherwise.
    static constexpr double rel_slack = 1e-12;
    int window_lo() const { return int(std::ceil(gamma / 2.0 * (1.0 - rel_slack))); }
    int window_hi() const { return int(std::floor(gamma * (1.0 + rel_slack))); }
    bool in_window(int phi) const { return phi >= window_lo() && phi <= window_hi(); }

    void require_window() const {
        if (gamma < 2.0) throw WindowEmpty("critical window is empty: gamma(p) < 2");
    }
};

// First trace node (in creation order) with a critical semi-perimeter.
inline std::optional<Droplet> find_critical_node(const MergeTrace& trace, const CriticalParams& params) {
    for (const auto& n : trace.nodes)
        if (params.in_window(n.droplet.phi())) return n.droplet;
    return std::nullopt;
}

// Fast Γ(X) test from the merge tree. Sound; may miss a critical droplet
// when one merge jumps over the window.
inline bool detect_critical(const Droplet& x, const SiteSet& a, const CriticalParams& params) {
    params.require_window();
    if (double(x.phi()) * 2.0 < params.gamma) return false;
    return find_critical_node(rectangles_process(a, x), params).has_value();
}

inline constexpr int exact_budget = 64;

class BudgetExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

namespace detail {

// Closure test for a region at most 64 wide, one word per row.
inline bool spans_small(std::vector<std::uint64_t> rows, int width) {
    const std::uint64_t full = width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    const std::size_t h = rows.size();
    std::vector<std::uint64_t> next(h);
    for (;;) {
        bool changed = false;
        for (std::size_t y = 0; y < h; ++y) {
            const std::uint64_t w = rows[y];
            const std::uint64_t l = w << 1, r = w >> 1;
            const std::uint64_t u = y + 1 < h ? rows[y + 1] : 0, dn = y > 0 ? rows[y - 1] : 0;
            const std::uint64_t nw = (w | (l & r) | ((l | r) & (u | dn)) | (u & dn)) & full;
            changed |= nw != w;
            next[y] = nw;
        }
        rows.swap(next);
        if (!changed) break;
    }
    return std::all_of(rows.begin(), rows.end(), [&](std::uint64_t w) { return w == full; });
}

}  // namespace detail

// Exhaustive Γ(X) test: every sub-droplet with a critical semi-perimeter is
// checked for internal spanning. Refuses when lg(X) exceeds the budget.
inline std::optional<Droplet> find_critical_exact(const Droplet& x, const SiteSet& a, const CriticalParams& params) {
    params.require_window();
    if (x.lg() > exact_budget) throw BudgetExceeded("detect_critical_exact: lg(X) exceeds 64");
    const int lo = params.window_lo(), hi = params.window_hi();
    if (x.phi() < lo) return std::nullopt;
    const SiteSet local = restrict_to(a, x);
    const int w = x.width(), h = x.height();
    std::vector<std::uint64_t> rows(std::size_t(h), 0);
    for (int y = 0; y < h; ++y) rows[std::size_t(y)] = local.row(y)[0];
    auto bits = [](std::uint64_t word, int from, int to) {  // bits from..to inclusive
        const int len = to - from + 1;
        const std::uint64_t m = len == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << len) - 1);
        return (word >> from) & m;
    };
    // colpre[x][y] = occupied sites in column x among rows < y.
    std::vector<std::vector<int>> colpre(std::size_t(w), std::vector<int>(std::size_t(h) + 1, 0));
    for (int cx = 0; cx < w; ++cx)
        for (int y = 0; y < h; ++y)
            colpre[std::size_t(cx)][std::size_t(y) + 1] =
                colpre[std::size_t(cx)][std::size_t(y)] + int((rows[std::size_t(y)] >> cx) & 1u);
    auto col_count = [&](int cx, int b, int d) {
        return colpre[std::size_t(cx)][std::size_t(d) + 1] - colpre[std::size_t(cx)][std::size_t(b)];
    };
    std::vector<int> rowcount(static_cast<std::size_t>(h));
    std::vector<int> rowpre(std::size_t(h) + 1);
    std::vector<int> block(std::size_t(h) + 1);
    for (int ca = 0; ca < w; ++ca) {
        for (int cc = ca; cc < w; ++cc) {
            const int dw = cc - ca + 1;
            if (dw + h < lo || dw + 1 > hi) continue;
            for (int y = 0; y < h; ++y) rowcount[std::size_t(y)] = std::popcount(bits(rows[std::size_t(y)], ca, cc));
            rowpre[0] = 0;
            for (int y = 0; y < h; ++y) rowpre[std::size_t(y) + 1] = rowpre[std::size_t(y)] + rowcount[std::size_t(y)];
            // block[y]: first y' >= y with rows y', y'+1 both empty (h if none).
            block[std::size_t(h)] = h;
            for (int y = h - 1; y >= 0; --y) {
                const bool dbl = y + 1 < h && rowcount[std::size_t(y)] == 0 && rowcount[std::size_t(y) + 1] == 0;
                block[std::size_t(y)] = dbl ? y : block[std::size_t(y) + 1];
            }
            for (int b = 0; b < h; ++b) {
                if (rowcount[std::size_t(b)] == 0) continue;
                const int dmin = b + std::max(0, lo - dw - 1);
                const int dmax = std::min({h - 1, b + hi - dw - 1, block[std::size_t(b)]});
                for (int d = dmin; d <= dmax; ++d) {
                    if (rowcount[std::size_t(d)] == 0) continue;
                    if (col_count(ca, b, d) == 0 || col_count(cc, b, d) == 0) continue;
                    const int dh = d - b + 1;
                    if (2 * (rowpre[std::size_t(d) + 1] - rowpre[std::size_t(b)]) < dw + dh) continue;
                    bool blocked = false;
                    for (int cx = ca; cx < cc && !blocked; ++cx)
                        blocked = col_count(cx, b, d) == 0 && col_count(cx + 1, b, d) == 0;
                    if (blocked) continue;
                    std::vector<std::uint64_t> sub(static_cast<std::size_t>(dh));
                    for (int y = b; y <= d; ++y) sub[std::size_t(y - b)] = bits(rows[std::size_t(y)], ca, cc);
                    if (detail::spans_small(std::move(sub), dw))
                        return Droplet{x.a + ca, x.b + b, x.a + cc, x.b + d};
                }
            }
        }
    }
    return std::nullopt;
}

inline bool detect_critical_exact(const Droplet& x, const SiteSet& a, const CriticalParams& params) {
    return find_critical_exact(x, a, params).has_value();
}

struct ScaleWitness {
    int k = 0;
    Droplet witness;
    int node = -1;

    bool operator==(const ScaleWitness&) const = default;
};

// For each 1 <= k <= lg(D)/2, an internally spanned D' ⊆ D from the merge
// tree with k <= lg(D') <= 2k. Found by walking down from D towards the
// parent with the larger long side until lg drops to 2k or below.
inline std::vector<ScaleWitness> al_scale_scan(const Droplet& d, const SiteSet& a) {
    const MergeTrace trace = rectangles_process(a, d);
    if (trace.finals.size() != 1 || trace.nodes[std::size_t(trace.finals[0])].droplet != d)
        throw std::invalid_argument("al_scale_scan: droplet is not internally spanned");
    const int root = trace.finals[0];
    std::vector<ScaleWitness> out;
    for (int k = 1; 2 * k <= d.lg(); ++k) {
        int node = root;
        while (trace.nodes[std::size_t(node)].droplet.lg() > 2 * k) {
            const auto& n = trace.nodes[std::size_t(node)];
            const int l1 = trace.nodes[std::size_t(n.parent1)].droplet.lg();
            const int l2 = trace.nodes[std::size_t(n.parent2)].droplet.lg();
            node = l2 > l1 ? n.parent2 : n.parent1;
        }
        const Droplet w = trace.nodes[std::size_t(node)].droplet;
        if (w.lg() < k) throw std::logic_error("al_scale_scan: merge tree violates the long-side bound");
        out.push_back({k, w, node});
    }
    return out;
}

}  // namespace bootperc
