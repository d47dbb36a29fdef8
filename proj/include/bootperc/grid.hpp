#pragma once

// Two-neighbour bootstrap percolation on a finite rectangular grid.
//
// Coordinates are 0-based: site (x, y) has column x in [0, width) and row y
// in [0, height). The usual 1-based lattice [n]^2 maps to this by
// (x1, x2) = (x + 1, y + 1). Grid edges are hard; there is no wraparound.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bootperc {

struct Site {
    int x = 0;
    int y = 0;

    bool operator==(const Site&) const = default;
    auto operator<=>(const Site&) const = default;
};

struct GridConfig {
    int width = 1;
    int height = 1;

    GridConfig() = default;
    GridConfig(int w, int h) : width(w), height(h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("GridConfig: width and height must be >= 1");
    }

    static GridConfig square(int n) { return GridConfig(n, n); }

    std::size_t sites() const { return std::size_t(width) * std::size_t(height); }
    bool contains(Site s) const { return s.x >= 0 && s.y >= 0 && s.x < width && s.y < height; }
    std::size_t index(Site s) const { return std::size_t(s.y) * std::size_t(width) + std::size_t(s.x); }

    bool operator==(const GridConfig&) const = default;
};

// Bit-per-site occupancy mask. Rows are packed into 64-bit words, bit x of a
// row lives in word x / 64 at position x % 64. Padding bits past `width` in
// the last word of each row are always zero.
class SiteSet {
public:
    SiteSet() : SiteSet(GridConfig{}) {}

    explicit SiteSet(GridConfig cfg)
        : cfg_(cfg),
          stride_((std::size_t(cfg.width) + 63) / 64),
          words_(stride_ * std::size_t(cfg.height), 0) {}

    static SiteSet full(GridConfig cfg) {
        SiteSet s(cfg);
        std::fill(s.words_.begin(), s.words_.end(), ~std::uint64_t{0});
        s.clear_padding();
        return s;
    }

    const GridConfig& config() const { return cfg_; }
    int width() const { return cfg_.width; }
    int height() const { return cfg_.height; }
    std::size_t stride() const { return stride_; }

    bool test(int x, int y) const {
        return (words_[std::size_t(y) * stride_ + std::size_t(x >> 6)] >> (x & 63)) & 1u;
    }
    bool test(Site s) const { return test(s.x, s.y); }

    // Out-of-grid coordinates read as empty.
    bool test_or_empty(int x, int y) const {
        return x >= 0 && y >= 0 && x < cfg_.width && y < cfg_.height && test(x, y);
    }

    void set(int x, int y, bool on = true) {
        auto& w = words_[std::size_t(y) * stride_ + std::size_t(x >> 6)];
        const std::uint64_t bit = std::uint64_t{1} << (x & 63);
        w = on ? (w | bit) : (w & ~bit);
    }
    void set(Site s, bool on = true) { set(s.x, s.y, on); }

    std::span<std::uint64_t> row(int y) { return {words_.data() + std::size_t(y) * stride_, stride_}; }
    std::span<const std::uint64_t> row(int y) const {
        return {words_.data() + std::size_t(y) * stride_, stride_};
    }
    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> words() { return words_; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto w : words_) n += std::size_t(std::popcount(w));
        return n;
    }
    bool empty() const {
        return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
    }
    bool is_full() const { return count() == cfg_.sites(); }

    bool subset_of(const SiteSet& other) const {
        require_same_shape(other);
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~other.words_[i]) return false;
        return true;
    }

    SiteSet& operator|=(const SiteSet& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    SiteSet& operator&=(const SiteSet& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    friend SiteSet operator|(SiteSet a, const SiteSet& b) { return a |= b; }
    friend SiteSet operator&(SiteSet a, const SiteSet& b) { return a &= b; }

    SiteSet complement() const {
        SiteSet r(cfg_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = ~words_[i];
        r.clear_padding();
        return r;
    }

    std::vector<Site> sites() const {
        std::vector<Site> out;
        for (int y = 0; y < cfg_.height; ++y) {
            auto r = row(y);
            for (std::size_t k = 0; k < stride_; ++k) {
                std::uint64_t w = r[k];
                while (w) {
                    const int b = std::countr_zero(w);
                    out.push_back({int(k * 64) + b, y});
                    w &= w - 1;
                }
            }
        }
        return out;
    }

    void clear_padding() {
        const int tail = cfg_.width & 63;
        if (tail == 0) return;
        const std::uint64_t mask = (std::uint64_t{1} << tail) - 1;
        for (int y = 0; y < cfg_.height; ++y) words_[std::size_t(y) * stride_ + stride_ - 1] &= mask;
    }

    bool operator==(const SiteSet& o) const { return cfg_ == o.cfg_ && words_ == o.words_; }

private:
    void require_same_shape(const SiteSet& o) const {
        if (!(cfg_ == o.cfg_)) throw std::invalid_argument("SiteSet: grid shapes differ");
    }

    GridConfig cfg_;
    std::size_t stride_;
    std::vector<std::uint64_t> words_;
};

// Per-site first infection time; NEVER for sites outside the closure.
class InfectionField {
public:
    static constexpr std::uint32_t NEVER = std::numeric_limits<std::uint32_t>::max();

    InfectionField() = default;
    explicit InfectionField(GridConfig cfg) : cfg_(cfg), time_(cfg.sites(), NEVER) {}

    const GridConfig& config() const { return cfg_; }
    std::uint32_t at(int x, int y) const { return time_[cfg_.index({x, y})]; }
    std::uint32_t at(Site s) const { return time_[cfg_.index(s)]; }
    void assign(int x, int y, std::uint32_t t) { time_[cfg_.index({x, y})] = t; }
    std::span<const std::uint32_t> values() const { return time_; }

    // Sites with time <= t.
    SiteSet level_set(std::uint32_t t) const {
        SiteSet s(cfg_);
        for (int y = 0; y < cfg_.height; ++y)
            for (int x = 0; x < cfg_.width; ++x)
                if (at(x, y) <= t) s.set(x, y);
        return s;
    }

    // Largest finite time, or nullopt when some site is never infected.
    std::optional<std::uint32_t> max_time() const {
        std::uint32_t m = 0;
        for (auto t : time_) {
            if (t == NEVER) return std::nullopt;
            m = std::max(m, t);
        }
        return m;
    }

    bool operator==(const InfectionField&) const = default;

private:
    GridConfig cfg_;
    std::vector<std::uint32_t> time_;
};

namespace detail {

// Sites with at least two of their four neighbours in `s`, computed for row
// y into `out`. Bits beyond the grid are treated as empty.
inline void two_neighbour_row(const SiteSet& s, int y, std::span<std::uint64_t> out) {
    const std::size_t stride = s.stride();
    const auto cur = s.row(y);
    const std::uint64_t* up = y + 1 < s.height() ? s.row(y + 1).data() : nullptr;
    const std::uint64_t* dn = y > 0 ? s.row(y - 1).data() : nullptr;
    for (std::size_t k = 0; k < stride; ++k) {
        const std::uint64_t w = cur[k];
        const std::uint64_t prev = k > 0 ? cur[k - 1] : 0;
        const std::uint64_t next = k + 1 < stride ? cur[k + 1] : 0;
        const std::uint64_t left = (w << 1) | (prev >> 63);   // neighbour at x-1
        const std::uint64_t right = (w >> 1) | (next << 63);  // neighbour at x+1
        const std::uint64_t u = up ? up[k] : 0;
        const std::uint64_t d = dn ? dn[k] : 0;
        out[k] = (left & right) | ((left | right) & (u | d)) | (u & d);
    }
}

}  // namespace detail

// One synchronous update: A_t = A_{t-1} plus every site with >= 2 infected
// neighbours.
inline SiteSet step(const SiteSet& state) {
    SiteSet next(state.config());
    for (int y = 0; y < state.height(); ++y) {
        auto out = next.row(y);
        detail::two_neighbour_row(state, y, out);
        const auto cur = state.row(y);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] |= cur[k];
    }
    next.clear_padding();
    return next;
}

// Advances `state` by one step in place; returns whether anything changed.
inline bool step_in_place(SiteSet& state, SiteSet& scratch) {
    bool changed = false;
    for (int y = 0; y < state.height(); ++y) {
        auto out = scratch.row(y);
        detail::two_neighbour_row(state, y, out);
        const auto cur = state.row(y);
        for (std::size_t k = 0; k < out.size(); ++k) {
            const std::uint64_t merged = out[k] | cur[k];
            changed |= merged != cur[k];
            out[k] = merged;
        }
    }
    scratch.clear_padding();
    std::swap(state, scratch);
    return changed;
}

enum class EvolveStatus {
    percolated,     // closure is the whole grid, T is finite
    not_percolated, // fixed point reached short of the whole grid
    step_limit,     // max_steps reached before a fixed point
};

struct EvolveResult {
    SiteSet closure;
    std::optional<InfectionField> field;
    EvolveStatus status = EvolveStatus::not_percolated;
    std::uint32_t steps = 0;  // number of steps that changed the state

    bool percolated() const { return status == EvolveStatus::percolated; }
    // Percolation time T, when the grid percolated.
    std::optional<std::uint32_t> percolation_time() const {
        return percolated() ? std::optional<std::uint32_t>(steps) : std::nullopt;
    }
};

struct EvolveOptions {
    std::optional<std::uint32_t> max_steps;  // nullopt = run to the fixed point
    bool track_times = false;
};

// Runs the process until the first step with no change. The number of
// productive steps never exceeds width * height.
inline EvolveResult evolve(const SiteSet& initial, EvolveOptions opts = {}) {
    EvolveResult r;
    r.closure = initial;
    SiteSet scratch(initial.config());
    InfectionField field;
    if (opts.track_times) {
        field = InfectionField(initial.config());
        for (const auto& s : initial.sites()) field.assign(s.x, s.y, 0);
    }
    SiteSet before = opts.track_times ? initial : SiteSet{};
    std::uint32_t t = 0;
    for (;;) {
        if (opts.max_steps && t >= *opts.max_steps) {
            // One more probe distinguishes "already fixed" from "cut short".
            SiteSet probe = step(r.closure);
            r.status = probe == r.closure ? (r.closure.is_full() ? EvolveStatus::percolated
                                                                 : EvolveStatus::not_percolated)
                                          : EvolveStatus::step_limit;
            break;
        }
        if (opts.track_times) before = r.closure;
        if (!step_in_place(r.closure, scratch)) {
            r.status = r.closure.is_full() ? EvolveStatus::percolated : EvolveStatus::not_percolated;
            break;
        }
        ++t;
        if (opts.track_times) {
            for (int y = 0; y < r.closure.height(); ++y) {
                const auto now = r.closure.row(y);
                const auto old = before.row(y);
                for (std::size_t k = 0; k < now.size(); ++k) {
                    std::uint64_t fresh = now[k] & ~old[k];
                    while (fresh) {
                        const int b = std::countr_zero(fresh);
                        field.assign(int(k * 64) + b, y, t);
                        fresh &= fresh - 1;
                    }
                }
            }
        }
    }
    r.steps = t;
    if (opts.track_times) r.field = std::move(field);
    return r;
}

// A_t for initial set X, i.e. [X]_t.
inline SiteSet evolve_to(const SiteSet& initial, std::uint32_t t) {
    SiteSet cur = initial;
    SiteSet scratch(initial.config());
    for (std::uint32_t i = 0; i < t; ++i)
        if (!step_in_place(cur, scratch)) break;
    return cur;
}

enum class Orientation { horizontal, vertical };

struct EmptyDoubleLine {
    int length = 0;
    Orientation orientation = Orientation::horizontal;
    // Lower-left site of the 2 x length (or length x 2) empty rectangle.
    Site origin{};

    // True when no side of the rectangle lies on the grid boundary.
    bool interior(const GridConfig& cfg) const {
        if (length == 0) return false;
        const int w = orientation == Orientation::horizontal ? length : 2;
        const int h = orientation == Orientation::horizontal ? 2 : length;
        return origin.x > 0 && origin.y > 0 && origin.x + w < cfg.width && origin.y + h < cfg.height;
    }
};

// Longest 2 x L or L x 2 rectangle containing no site of A. Ties prefer
// horizontal, then the lowest row, then the lowest column.
inline EmptyDoubleLine longest_empty_double_line(const SiteSet& a) {
    EmptyDoubleLine best;
    const int w = a.width(), h = a.height();
    const std::size_t stride = a.stride();
    auto consider = [&](int len, Orientation o, Site origin) {
        if (len > best.length) best = {len, o, origin};
    };

    // Horizontal: empty runs in the union of consecutive rows.
    if (h >= 2) {
        std::vector<std::uint64_t> both(stride);
        for (int y = 0; y + 1 < h; ++y) {
            const auto r0 = a.row(y), r1 = a.row(y + 1);
            for (std::size_t k = 0; k < stride; ++k) both[k] = r0[k] | r1[k];
            int run = 0;
            for (int x = 0; x < w; ++x) {
                if ((both[std::size_t(x >> 6)] >> (x & 63)) & 1u) {
                    run = 0;
                } else {
                    ++run;
                    consider(run, Orientation::horizontal, {x - run + 1, y});
                }
            }
        }
    }
    // Vertical: per column pair, count consecutive rows where both are empty.
    if (w >= 2) {
        std::vector<int> run(std::size_t(w - 1), 0);
        for (int y = 0; y < h; ++y) {
            const auto r = a.row(y);
            for (int x = 0; x + 1 < w; ++x) {
                const bool occ = ((r[std::size_t(x >> 6)] >> (x & 63)) & 1u) ||
                                 ((r[std::size_t((x + 1) >> 6)] >> ((x + 1) & 63)) & 1u);
                run[std::size_t(x)] = occ ? 0 : run[std::size_t(x)] + 1;
                const int len = run[std::size_t(x)];
                if (len > best.length) best = {len, Orientation::vertical, {x, y - len + 1}};
            }
        }
    }
    return best;
}

}  // namespace bootperc
