#pragma once

// Text persistence for solved tables (format tag USS1).
//
// Layout: `#` comment header carrying the format tag, problem parameters and
// solver tolerances, then three sections of CSV rows (values, thresholds_a,
// thresholds_b). Each row holds the m grid values of one (i,k) slice, i
// fastest-outermost, k innermost, written as 17-significant-digit decimals
// via std::to_chars so a round trip reproduces every double bit-exactly.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "uss/bellman.hpp"

namespace uss::bellman {

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline void write_rows(std::string& out, const std::vector<double>& flat, int m) {
    const std::size_t rows = flat.size() / m;
    for (std::size_t r = 0; r < rows; ++r) {
        for (int j = 0; j < m; ++j) {
            if (j) out.push_back(',');
            append_double(out, flat[r * m + j]);
        }
        out.push_back('\n');
    }
}

inline double parse_double(const char* first, const char* last, const char** next) {
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{}) throw std::runtime_error("table file: malformed number");
    *next = res.ptr;
    return v;
}

inline void parse_rows(std::istream& in, std::vector<double>& flat, std::size_t rows, int m,
                       const char* what) {
    flat.clear();
    flat.reserve(rows * m);
    std::string line;
    std::size_t got = 0;
    while (got < rows) {
        if (!std::getline(in, line))
            throw std::runtime_error(std::string("table file: truncated ") + what + " section");
        if (line.empty() || line[0] == '#') continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int j = 0; j < m; ++j) {
            if (j) {
                if (p >= end || *p != ',') throw std::runtime_error("table file: short row");
                ++p;
            }
            flat.push_back(parse_double(p, end, &p));
        }
        if (p != end) throw std::runtime_error("table file: long row");
        ++got;
    }
}

} // namespace detail

inline void save_tables(const std::string& path, const ValueTable& vt, const ThresholdTable& tt) {
    if (!vt.solved()) throw std::logic_error("save_tables: value table not solved");
    if (!(tt.spec == vt.spec)) throw std::invalid_argument("save_tables: spec mismatch");
    const auto& spec = vt.spec;

    std::string out;
    out.reserve(vt.values.size() * 20);
    out += "# USS1\n";
    out += "# n " + std::to_string(spec.n) + "\n";
    out += "# d " + std::to_string(spec.d) + "\n";
    out += "# m " + std::to_string(spec.m) + "\n";
    out += "# tol_x ";
    detail::append_double(out, tol_x);
    out += "\n# tol_v ";
    detail::append_double(out, tol_v);
    out += "\n# rows: values i=1..n+1 by k=0..d, then thresholds a and b i=1..n by k=0..d\n";
    out += "# section values\n";
    detail::write_rows(out, vt.values, spec.m);
    out += "# section thresholds_a\n";
    detail::write_rows(out, tt.a, spec.m);
    out += "# section thresholds_b\n";
    detail::write_rows(out, tt.b, spec.m);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_tables: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_tables: write failed for " + path);
}

inline std::pair<ValueTable, ThresholdTable> load_tables(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_tables: cannot open " + path);

    ProblemSpec spec;
    bool saw_tag = false;
    int fields = 0;
    std::string line;
    // Header: everything up to the first section marker.
    while (std::getline(f, line)) {
        if (line.rfind("# section values", 0) == 0) break;
        if (line.rfind("# USS1", 0) == 0) { saw_tag = true; continue; }
        std::istringstream ls(line);
        std::string hash, key;
        if (!(ls >> hash >> key) || hash != "#") continue;
        if (key == "n" && (ls >> spec.n)) ++fields;
        else if (key == "d" && (ls >> spec.d)) ++fields;
        else if (key == "m" && (ls >> spec.m)) ++fields;
        else if (key == "tol_x") {
            double t = 0; ls >> t;
            if (t != tol_x) throw std::runtime_error("load_tables: tol_x mismatch");
        } else if (key == "tol_v") {
            double t = 0; ls >> t;
            if (t != tol_v) throw std::runtime_error("load_tables: tol_v mismatch");
        }
    }
    if (!saw_tag) throw std::runtime_error("load_tables: missing USS1 format tag");
    if (fields != 3) throw std::runtime_error("load_tables: incomplete header");
    spec.validate();

    const std::size_t kcount = static_cast<std::size_t>(spec.d) + 1;
    ValueTable vt;
    vt.spec = spec;
    detail::parse_rows(f, vt.values, (spec.n + 1) * kcount, spec.m, "values");

    ThresholdTable tt;
    tt.spec = spec;
    detail::parse_rows(f, tt.a, spec.n * kcount, spec.m, "thresholds_a");
    detail::parse_rows(f, tt.b, spec.n * kcount, spec.m, "thresholds_b");
    return {std::move(vt), std::move(tt)};
}

} // namespace uss::bellman
