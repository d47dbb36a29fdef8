#pragma once

// Standalone checks with no randomness in the quantity checked: counts of
// connected induced subgraphs, and a log-domain minimization over the
// region of the closing inequality.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace bootperc {

struct Graph {
    std::string name;
    std::vector<std::vector<int>> adj;

    int order() const { return int(adj.size()); }
    int max_degree() const {
        std::size_t d = 0;
        for (const auto& a : adj) d = std::max(d, a.size());
        return int(d);
    }

    void add_edge(int u, int v) {
        if (u == v) throw std::invalid_argument("Graph: loops not allowed");
        if (std::find(adj[std::size_t(u)].begin(), adj[std::size_t(u)].end(), v) != adj[std::size_t(u)].end()) return;
        adj[std::size_t(u)].push_back(v);
        adj[std::size_t(v)].push_back(u);
    }

    static Graph empty(std::string name, int n) { return {std::move(name), std::vector<std::vector<int>>(std::size_t(n))}; }

    static Graph path(int n) {
        auto g = empty("path" + std::to_string(n), n);
        for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
        return g;
    }
    static Graph cycle(int n) {
        if (n < 3) throw std::invalid_argument("Graph::cycle: need n >= 3");
        auto g = path(n);
        g.name = "cycle" + std::to_string(n);
        g.add_edge(n - 1, 0);
        return g;
    }
    static Graph complete(int n) {
        auto g = empty("complete" + std::to_string(n), n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
        return g;
    }
    static Graph grid(int w, int h) {
        auto g = empty("grid" + std::to_string(w) + "x" + std::to_string(h), w * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (x + 1 < w) g.add_edge(y * w + x, y * w + x + 1);
                if (y + 1 < h) g.add_edge(y * w + x, (y + 1) * w + x);
            }
        return g;
    }
    // Random edges added while both ends have spare degree.
    static Graph random_bounded(int n, int max_deg, int attempts, std::mt19937_64& rng) {
        auto g = empty("random" + std::to_string(n), n);
        for (int i = 0; i < attempts; ++i) {
            const int u = int(rng() % std::uint64_t(n)), v = int(rng() % std::uint64_t(n));
            if (u == v || int(g.adj[std::size_t(u)].size()) >= max_deg || int(g.adj[std::size_t(v)].size()) >= max_deg)
                continue;
            g.add_edge(u, v);
        }
        return g;
    }
};

inline constexpr int subgraph_vertex_limit = 64;

class EnumerationBudget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Number of connected induced subgraphs of order k containing v: grow
// vertex sets one neighbour at a time, deduplicating by bitmask.
inline std::uint64_t count_connected_subgraphs(const Graph& g, int v, int k, std::size_t budget = 5'000'000) {
    if (g.order() > subgraph_vertex_limit) throw std::invalid_argument("count_connected_subgraphs: more than 64 vertices");
    if (v < 0 || v >= g.order()) throw std::out_of_range("count_connected_subgraphs: vertex out of range");
    if (k < 1) throw std::invalid_argument("count_connected_subgraphs: k must be >= 1");
    if (k > g.order()) return 0;
    std::vector<std::uint64_t> nbr(std::size_t(g.order()), 0);
    for (int u = 0; u < g.order(); ++u)
        for (int w : g.adj[std::size_t(u)]) nbr[std::size_t(u)] |= std::uint64_t{1} << w;
    std::unordered_set<std::uint64_t> level{std::uint64_t{1} << v};
    for (int size = 1; size < k; ++size) {
        std::unordered_set<std::uint64_t> next;
        for (const auto s : level) {
            std::uint64_t frontier = 0;
            for (std::uint64_t rest = s; rest; rest &= rest - 1) frontier |= nbr[std::size_t(std::countr_zero(rest))];
            frontier &= ~s;
            for (; frontier; frontier &= frontier - 1) next.insert(s | (frontier & -frontier));
            if (next.size() > budget) throw EnumerationBudget("count_connected_subgraphs: budget exceeded");
        }
        level = std::move(next);
    }
    return level.size();
}

struct CoffeetimeResult {
    std::uint64_t count = 0;
    double bound = 0.0;  // (e (d - 1))^k
    bool pass = false;
};

inline CoffeetimeResult coffeetime_check(const Graph& g, int v, int k) {
    const int d = g.max_degree();
    if (d < 2) throw std::invalid_argument("coffeetime_check: maximum degree must be >= 2");
    CoffeetimeResult r;
    r.count = count_connected_subgraphs(g, v, k);
    r.bound = std::pow(std::numbers::e * double(d - 1), k);
    r.pass = double(r.count) <= r.bound;
    return r;
}

// Paths and cycles up to 12 vertices, complete graphs K3..K6, grid graphs
// up to 5 x 5 and 50 random graphs on at most 10 vertices with maximum
// degree at most 5; graphs with maximum degree below 2 are left out.
inline std::vector<Graph> coffeetime_corpus(std::uint64_t seed = 12345) {
    std::vector<Graph> gs;
    for (int n = 3; n <= 12; ++n) gs.push_back(Graph::path(n));
    for (int n = 3; n <= 12; ++n) gs.push_back(Graph::cycle(n));
    for (int n = 3; n <= 6; ++n) gs.push_back(Graph::complete(n));
    for (int w = 1; w <= 5; ++w)
        for (int h = w; h <= 5; ++h)
            if (w * h >= 3) gs.push_back(Graph::grid(w, h));
    std::mt19937_64 rng(seed);
    int made = 0;
    while (made < 50) {
        const int n = 3 + int(rng() % 8);
        auto g = Graph::random_bounded(n, 1 + int(rng() % 5), 4 * n, rng);
        if (g.max_degree() < 2) continue;
        g.name += "_" + std::to_string(made);
        gs.push_back(std::move(g));
        ++made;
    }
    return gs;
}

// ------------------------------------------------------ closing calculation

struct CalcPoint {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double f = 0.0;
};

struct CalcParams {
    double p = 1e-16;
    double epsilon = 0.05;
    double sigma = 36.0;
    double h = 1e6;
    // Right-hand side of the linear constraint as a fraction of h: 1 for
    // a + sigma b + gamma c >= h, 1/2 for the variant used downstream.
    double rhs_fraction = 1.0;
};

// f(a,b,c) = (b+2c) ln(1/p) - (a+b+c) ln(eps h / (a+b+c)), with the second
// term taken as 0 at a+b+c = 0. Logs only, so p = 1e-16 is harmless.
inline double calc_f(const CalcParams& cp, double a, double b, double c) {
    const double s = a + b + c;
    const double lp = -std::log(cp.p);
    const double tail = s > 0.0 ? s * (std::log(cp.epsilon * cp.h) - std::log(s)) : 0.0;
    return (b + 2.0 * c) * lp - tail;
}

struct CalcResult {
    CalcParams params;
    double gamma = 0.0;
    int resolution = 0;
    std::int64_t evaluated = 0;
    CalcPoint argmin;
    bool pass = false;  // min f >= -1e-9 h
    std::vector<std::string> warnings;
};

// Grid search over the region {a + sigma b + gamma c >= r h, c <= h p / gamma,
// a, b, c >= 0}: a geometric lattice in each variable (plus 0), clipped to
// the region, together with the two faces where the minimum can sit
// (c = 0 with a = r h - sigma b, and a = r h - sigma b - gamma c).
inline CalcResult appendix_calc_check(const CalcParams& cp, int resolution) {
    if (resolution < 2) throw std::invalid_argument("appendix_calc_check: resolution must be >= 2");
    if (!(cp.p > 0 && cp.p < 1 && cp.epsilon > 0 && cp.h > 0 && cp.sigma >= 1 && cp.rhs_fraction > 0))
        throw std::invalid_argument("appendix_calc_check: bad parameters");
    CalcResult r;
    r.params = cp;
    r.gamma = std::exp(-3.0 * std::log(cp.p));
    r.resolution = resolution;
    if (cp.p >= std::exp(-(cp.sigma - 1.0))) r.warnings.push_back("p is not below e^-(sigma-1)");
    if (cp.epsilon >= 1.0) r.warnings.push_back("epsilon is not below 1");
    const double rh = cp.rhs_fraction * cp.h;
    const double c_max = cp.h * cp.p / r.gamma;
    // Geometric ladder from span * 1e-12 to span, with 0 in front.
    auto ladder = [resolution](double span) {
        std::vector<double> v{0.0};
        if (span <= 0.0) return v;
        const double lo = span * 1e-12;
        for (int i = 0; i < resolution - 1; ++i)
            v.push_back(lo * std::pow(span / lo, double(i) / double(resolution - 2)));
        return v;
    };
    const auto as = ladder(4.0 * cp.h), bs = ladder(4.0 * cp.h / cp.sigma), cs = ladder(c_max);
    r.argmin.f = std::numeric_limits<double>::infinity();
    auto visit = [&](double a, double b, double c) {
        if (a < 0 || b < 0 || c < 0 || c > c_max) return;
        if (a + cp.sigma * b + r.gamma * c < rh * (1.0 - 1e-12)) return;
        const double f = calc_f(cp, a, b, c);
        ++r.evaluated;
        if (f < r.argmin.f) r.argmin = {a, b, c, f};
    };
    for (double a : as)
        for (double b : bs)
            for (double c : cs) visit(a, b, c);
    for (double b : bs) visit(rh - cp.sigma * b, b, 0.0);
    for (double b : bs)
        for (double c : cs) visit(rh - cp.sigma * b - r.gamma * c, b, c);
    r.pass = r.argmin.f >= -1e-9 * cp.h;
    return r;
}

}  // namespace bootperc
