#pragma once

// Text and binary encodings of SiteSet, and text rendering of infection
// times.
//
// Text: one line per row, row 0 first, '1' for occupied. Lines are joined by
// '\n' with no trailing newline.
//
// Binary ("BPGR"): 16-byte header of little-endian uint32 fields
//   magic "BPGR" | version | width | height
// followed by little-endian uint32 run lengths over the row-major site
// sequence, alternating empty/occupied and starting with an empty run
// (which may have length 0). Run lengths sum to width * height.

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grid.hpp"

namespace bootperc {

inline constexpr int max_text_side = 200;
inline constexpr std::uint32_t bpgr_version = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_text_size(const GridConfig& cfg) {
    if (cfg.width > max_text_side || cfg.height > max_text_side)
        throw std::length_error("grid larger than 200x200; use the binary BPGR format instead");
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b{char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                                char((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) return false;
    v = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
    return true;
}

}  // namespace detail

inline std::string render_text(const SiteSet& s) {
    detail::require_text_size(s.config());
    std::string out;
    out.reserve(std::size_t(s.width() + 1) * std::size_t(s.height()));
    for (int y = 0; y < s.height(); ++y) {
        if (y) out.push_back('\n');
        for (int x = 0; x < s.width(); ++x) out.push_back(s.test(x, y) ? '1' : '0');
    }
    return out;
}

// Space-separated times per row; NEVER prints as '-'.
inline std::string render_text(const InfectionField& f) {
    detail::require_text_size(f.config());
    std::string out;
    for (int y = 0; y < f.config().height; ++y) {
        if (y) out.push_back('\n');
        for (int x = 0; x < f.config().width; ++x) {
            if (x) out.push_back(' ');
            const auto t = f.at(x, y);
            out += t == InfectionField::NEVER ? std::string("-") : std::to_string(t);
        }
    }
    return out;
}

inline SiteSet parse_text(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw FormatError("grid text is empty");
    const auto width = lines.front().size();
    if (width == 0) throw FormatError("grid text has an empty row");
    SiteSet s{GridConfig{int(width), int(lines.size())}};
    for (std::size_t y = 0; y < lines.size(); ++y) {
        if (lines[y].size() != width) throw FormatError("grid rows have different lengths");
        for (std::size_t x = 0; x < width; ++x) {
            const char ch = lines[y][x];
            if (ch == '1') s.set(int(x), int(y));
            else if (ch != '0') throw FormatError("grid text may contain only '0' and '1'");
        }
    }
    return s;
}

inline void write_bpgr(std::ostream& os, const SiteSet& s) {
    os.write("BPGR", 4);
    detail::put_u32(os, bpgr_version);
    detail::put_u32(os, std::uint32_t(s.width()));
    detail::put_u32(os, std::uint32_t(s.height()));
    bool current = false;
    std::uint32_t run = 0;
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (s.test(x, y) != current) {
                detail::put_u32(os, run);
                current = !current;
                run = 0;
            }
            ++run;
        }
    }
    detail::put_u32(os, run);
}

inline SiteSet read_bpgr(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || std::string_view(magic.data(), 4) != "BPGR")
        throw FormatError("missing BPGR magic");
    std::uint32_t version = 0, w = 0, h = 0;
    if (!detail::get_u32(is, version) || !detail::get_u32(is, w) || !detail::get_u32(is, h))
        throw FormatError("truncated BPGR header");
    if (version != bpgr_version) throw FormatError("unsupported BPGR version " + std::to_string(version));
    if (w == 0 || h == 0 || w > 1u << 20 || h > 1u << 20) throw FormatError("BPGR dimensions out of range");
    SiteSet s{GridConfig{int(w), int(h)}};
    const std::uint64_t total = std::uint64_t(w) * h;
    std::uint64_t pos = 0;
    bool current = false;
    std::uint32_t run = 0;
    while (pos < total) {
        if (!detail::get_u32(is, run)) throw FormatError("truncated BPGR body");
        if (pos + run > total) throw FormatError("BPGR runs exceed grid size");
        if (current)
            for (std::uint64_t i = pos; i < pos + run; ++i) s.set(int(i % w), int(i / w));
        pos += run;
        current = !current;
    }
    return s;
}

inline std::string to_bpgr(const SiteSet& s) {
    std::ostringstream os(std::ios::binary);
    write_bpgr(os, s);
    return std::move(os).str();
}

inline SiteSet from_bpgr(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    return read_bpgr(is);
}

}  // namespace bootperc
