#pragma once

// Scale constants, the cell taxonomy, traversability predicates and the
// up-right path search.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "droplet.hpp"
#include "grid.hpp"
#include "rectangles.hpp"

namespace bootperc {

inline constexpr double lambda_const = std::numbers::pi * std::numbers::pi / 18.0;

struct ScaleParams {
    double B = 50.0;
    double A_const = 5.0;
    int sigma = 36;
    double c_slow = 0.25;
    double p0 = 0.2;
    double quick_B = 25.0;  // fixed by the traversal argument
    // Allows B < 50, sigma < 36 and small A_const for desk-scale probes.
    bool relaxed = false;

    void validate() const {
        if (!(B > 0.0) || !(A_const > 0.0) || sigma < 1)
            throw std::invalid_argument("ScaleParams: B, A_const and sigma must be positive");
        if (!relaxed && B < 50.0) throw std::invalid_argument("ScaleParams: B must be >= 50 unless relaxed");
        if (!relaxed && sigma < 36) throw std::invalid_argument("ScaleParams: sigma must be >= 36 unless relaxed");
        if (!(c_slow > 0.0 && c_slow < 0.5)) throw std::invalid_argument("ScaleParams: c_slow must lie in (0, 1/2)");
        if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("ScaleParams: p0 must lie in (0, 1)");
        if (quick_B != 25.0) throw std::invalid_argument("ScaleParams: quick_B is fixed at 25");
    }

    bool operator==(const ScaleParams&) const = default;
};

struct CriticalScale {
    double p = 0.0;
    double K_hat = 1.0;
    double mu_hat = 0.0;
    double lambda = lambda_const;

    static CriticalScale from_K(double p, double K_hat) {
        if (!(K_hat >= 1.0)) throw std::invalid_argument("CriticalScale: K_hat must be >= 1");
        return {p, K_hat, p * std::log(K_hat), lambda_const};
    }
};

// Time allowed for a cell of side m: floor(factor * m / p).
inline std::uint32_t cell_time(double factor, int m, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("cell_time: p must be positive");
    const double t = std::floor(factor * double(m) / p);
    return t >= 4.0e9 ? std::uint32_t(4000000000u) : std::uint32_t(t);
}

struct CellClass {
    bool strongly_good = false;
    bool good = false;
    bool interior_empty = false;  // m < 3: good holds vacuously

    bool semi_good() const { return good && !strongly_good; }
    bool bad() const { return !good; }
    bool weakly_bad() const { return !strongly_good; }
    bool operator==(const CellClass&) const = default;
};

inline CellClass classify_cell(const Droplet& cell, const SiteSet& a, const ScaleParams& params, double p) {
    if (cell.width() != cell.height()) throw std::invalid_argument("classify_cell: cell must be square");
    if (!cell.inside(a.config())) throw std::out_of_range("classify_cell: cell leaves the grid");
    const int m = cell.width();
    const SiteSet state = evolve_to(restrict_to(a, cell), cell_time(params.B, m, p));
    CellClass cls;
    cls.strongly_good = state.is_full();
    const auto in = interior(Droplet{0, 0, m - 1, m - 1});
    cls.interior_empty = !in.has_value();
    cls.good = cls.strongly_good || !in || all_set_in(state, *in);
    return cls;
}

struct Scales {
    double p = 0.0;
    double n = 0.0;
    double gamma = 0.0;
    double K = 0.0;
    double L = 0.0;
    double M = 0.0;
    bool M_first_branch = true;
    // log of (C L^2 q^-8)^(1/L) (1-p)^(1/8); the ratio guard wants it < 0.
    double log_ratio = 0.0;
    bool ratio_ok = true;
    std::vector<std::string> warnings;
};

inline constexpr double ratio_guard_C = 50.0;

// K is the critical grid size in force at p, that is the estimate at
// min(p, p0): for p > p0 the caller passes the value frozen at p0.
inline Scales derive_scales(double p, double n, const ScaleParams& params, double K) {
    params.validate();
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("derive_scales: p must lie in (0,1)");
    if (!(K >= 1.0)) throw std::invalid_argument("derive_scales: K must be >= 1");
    if (!(n > K)) throw std::invalid_argument("derive_scales: M needs n > K");
    Scales s;
    s.p = p;
    s.n = n;
    s.gamma = std::pow(p, -3.0);
    s.K = K;
    const double log_inv_q = -std::log1p(-p);
    s.L = params.A_const * K * K * log_inv_q;
    const double log_nk = std::log(n / K);
    const double m1 = params.A_const * std::sqrt(p * log_nk) * K;
    const double m2 = params.A_const * log_nk;
    s.M = std::max(m1, m2);
    s.M_first_branch = m1 >= m2;
    s.log_ratio = (std::log(ratio_guard_C) + 2.0 * std::log(s.L) + 8.0 * log_inv_q) / s.L + std::log1p(-p) / 8.0;
    s.ratio_ok = s.log_ratio < 0.0;
    if (!s.ratio_ok)
        s.warnings.push_back("ratio guard violated: (C L^2 q^-8)^(1/L) (1-p)^(1/8) = " +
                             std::to_string(std::exp(s.log_ratio)) + " >= 1");
    return s;
}

// Same, with K taken from a critical-scale estimate. The estimate must be
// for min(p, p0).
inline Scales derive_scales(double p, double n, const ScaleParams& params, const CriticalScale& k) {
    const double want = std::min(p, params.p0);
    if (std::abs(k.p - want) > 1e-12)
        throw std::invalid_argument("derive_scales: critical scale must be estimated at min(p, p0)");
    return derive_scales(p, n, params, k.K_hat);
}

namespace detail {

inline bool tall(const Droplet& s) { return s.height() >= s.width(); }

}  // namespace detail

// No empty double band across the long direction: a tall droplet needs
// every pair of consecutive rows occupied, a wide one every pair of
// consecutive columns.
inline bool is_traversable(const Droplet& s, const SiteSet& a) {
    const SiteSet local = restrict_to(a, s);
    const bool t = detail::tall(s);
    const int lines = t ? s.height() : s.width();
    std::vector<bool> occ(std::size_t(lines), false);
    for (int y = 0; y < local.height(); ++y)
        for (int x = 0; x < local.width(); ++x)
            if (local.test(x, y)) occ[std::size_t(t ? y : x)] = true;
    for (int i = 0; i + 1 < lines; ++i)
        if (!occ[std::size_t(i)] && !occ[std::size_t(i) + 1]) return false;
    return true;
}

// With the line just outside the near end full (below a tall droplet, left
// of a wide one), every site except the far row or column is infected by
// time floor(25 m / p), where m = sh + 2. Evolution is confined to the
// droplet plus that line.
inline bool is_quickly_traversable(const Droplet& s, const SiteSet& a, double p,
                                   const ScaleParams& params = {}) {
    const bool t = detail::tall(s);
    const int m = s.sh() + 2;
    const SiteSet inside = restrict_to(a, s);
    const int w = s.width(), h = s.height();
    SiteSet local(t ? GridConfig(w, h + 1) : GridConfig(w + 1, h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (inside.test(x, y)) local.set(t ? x : x + 1, t ? y + 1 : y);
    if (t)
        for (int x = 0; x < w; ++x) local.set(x, 0);
    else
        for (int y = 0; y < h; ++y) local.set(0, y);
    if ((t && h < 2) || (!t && w < 2)) return true;
    const SiteSet state = evolve_to(local, cell_time(params.quick_B, m, p));
    // Shifted coordinates: rows 1..h-1 (tall) or columns 1..w-1 (wide).
    return all_set_in(state, t ? Droplet{0, 1, w - 1, h - 1} : Droplet{1, 0, w - 1, h - 1});
}

// Every single row and every single column of D holds an occupied site.
inline bool is_row_traversable(const Droplet& d, const SiteSet& a) {
    if (d.width() != d.height()) throw std::invalid_argument("is_row_traversable: cell must be square");
    const SiteSet local = restrict_to(a, d);
    std::vector<bool> row(std::size_t(d.height()), false), col(std::size_t(d.width()), false);
    for (int y = 0; y < local.height(); ++y)
        for (int x = 0; x < local.width(); ++x)
            if (local.test(x, y)) row[std::size_t(y)] = col[std::size_t(x)] = true;
    return std::all_of(row.begin(), row.end(), [](bool b) { return b; }) &&
           std::all_of(col.begin(), col.end(), [](bool b) { return b; });
}

// Path of `length` sites from `origin`, each step +1 in x or +1 in y,
// avoiding `state`. Returns the lexicographically least one when moves are
// ordered right before up.
inline std::optional<std::vector<Site>> find_upright_uninfected_path(const SiteSet& state, Site origin, int length) {
    const GridConfig& cfg = state.config();
    if (!cfg.contains(origin)) throw std::out_of_range("find_upright_uninfected_path: origin outside the grid");
    if (length < 0) throw std::invalid_argument("find_upright_uninfected_path: negative length");
    if (length == 0) return std::vector<Site>{};
    // Every path of the requested length ends on the diagonal x + y = last.
    const int last = origin.x + origin.y + length - 1;
    const int w = std::min(cfg.width - origin.x, length), h = std::min(cfg.height - origin.y, length);
    // ok[j][i]: a valid path continues from (origin.x + i, origin.y + j).
    std::vector<std::vector<char>> ok(std::size_t(h), std::vector<char>(std::size_t(w), 0));
    for (int j = h - 1; j >= 0; --j)
        for (int i = w - 1; i >= 0; --i) {
            const int x = origin.x + i, y = origin.y + j;
            if (x + y > last || state.test(x, y)) continue;
            if (x + y == last) {
                ok[std::size_t(j)][std::size_t(i)] = 1;
                continue;
            }
            const bool right = i + 1 < w && ok[std::size_t(j)][std::size_t(i) + 1];
            const bool up = j + 1 < h && ok[std::size_t(j) + 1][std::size_t(i)];
            ok[std::size_t(j)][std::size_t(i)] = right || up;
        }
    if (!ok[0][0]) return std::nullopt;
    std::vector<Site> path{origin};
    int i = 0, j = 0;
    while (origin.x + i + origin.y + j < last) {
        if (i + 1 < w && ok[std::size_t(j)][std::size_t(i) + 1]) ++i;
        else ++j;
        path.push_back({origin.x + i, origin.y + j});
    }
    return path;
}

}  // namespace bootperc
