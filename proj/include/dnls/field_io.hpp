#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dnls/field.hpp"

namespace dnls {

/// 17-significant-digit, locale-independent rendering; parses back to the
/// identical bit pattern.
inline std::string format_g17(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("parse_double: bad number '" + std::string(s) + "'");
    return x;
}

inline long parse_long(std::string_view s) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("parse_long: bad integer '" + std::string(s) + "'");
    return v;
}

/// Snapshot format: header `dnls-field v1 d=<d> R=<R> boundary=<D|P>`, then
/// one line per site `i1 ... id re im` in row-major box order.
inline void write_field(std::ostream& os, const LatticeField& f) {
    os << "dnls-field v1 d=" << f.box.dim() << " R=" << f.box.radius() << " boundary="
       << (f.boundary == Boundary::Dirichlet ? 'D' : 'P') << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (int j = 0; j < f.box.dim(); ++j) os << f.box.coord(i, j) << ' ';
        os << format_g17(f.values[i].real()) << ' ' << format_g17(f.values[i].imag())
           << '\n';
    }
}

inline LatticeField read_field(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::invalid_argument("read_field: empty input");
    std::istringstream hs(header);
    std::string magic, dtok, rtok, btok;
    hs >> magic >> dtok;
    if (magic != "dnls-field" || dtok != "v1")
        throw std::invalid_argument("read_field: bad header '" + header + "'");
    int d = -1, R = -1;
    char bc = '?';
    std::string tok;
    while (hs >> tok) {
        if (tok.rfind("d=", 0) == 0)
            d = static_cast<int>(parse_long(std::string_view(tok).substr(2)));
        else if (tok.rfind("R=", 0) == 0)
            R = static_cast<int>(parse_long(std::string_view(tok).substr(2)));
        else if (tok.rfind("boundary=", 0) == 0)
            bc = tok[9];
        else
            throw std::invalid_argument("read_field: unknown header token '" + tok + "'");
    }
    if (d < 1 || R < 1 || (bc != 'D' && bc != 'P'))
        throw std::invalid_argument("read_field: incomplete header '" + header + "'");

    Box b(d, R);
    LatticeField f(b, bc == 'D' ? Boundary::Dirichlet : Boundary::Periodic);
    std::vector<char> seen(b.size(), 0);
    std::string line;
    std::vector<int> coords(static_cast<std::size_t>(d));
    for (std::size_t count = 0; count < b.size(); ++count) {
        if (!std::getline(is, line))
            throw std::invalid_argument("read_field: truncated after " +
                                        std::to_string(count) + " sites");
        std::istringstream ls(line);
        for (int j = 0; j < d; ++j) {
            std::string c;
            if (!(ls >> c)) throw std::invalid_argument("read_field: short line '" + line + "'");
            coords[static_cast<std::size_t>(j)] = static_cast<int>(parse_long(c));
        }
        std::string re, im;
        if (!(ls >> re >> im))
            throw std::invalid_argument("read_field: short line '" + line + "'");
        const std::size_t i = b.index(coords);
        if (seen[i]) throw std::invalid_argument("read_field: duplicate site in '" + line + "'");
        seen[i] = 1;
        f.values[i] = {parse_double(re), parse_double(im)};
    }
    return f;
}

inline void write_field_file(const std::string& path, const LatticeField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field_file: cannot open " + path);
    write_field(os, f);
}

inline LatticeField read_field_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_field_file: cannot open " + path);
    return read_field(is);
}

/// FNV-1a 64-bit content hash used by run manifests.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace dnls
