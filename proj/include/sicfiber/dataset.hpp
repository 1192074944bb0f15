#pragma once

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/sic.hpp"

namespace sicfiber {

using PairedSequences = std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>>;

// Paired (x, y) records, one row per symbol:
//   seq  idx  radius_idx  phase_idx  x_re  x_im  y_re  y_im
// Hex float fields keep the round trip bit-exact.
inline void write_dataset(const std::filesystem::path& path, const PairedSequences& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path.string());
    out << "# sicfiber dataset v1\n";
    out << "# seq\tidx\tradius_idx\tphase_idx\tx_re\tx_im\ty_re\ty_im\n";
    char buf[160];
    for (std::size_t s = 0; s < data.size(); ++s) {
        const auto& [x, y] = data[s];
        if (x.size() != y.size()) throw std::invalid_argument("write_dataset: length mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%d\t%d\t%a\t%a\t%a\t%a\n", s, i,
                          x.radius_idx[i], x.phase_idx[i], x.values[i].real(),
                          x.values[i].imag(), y[i].real(), y[i].imag());
            out << buf;
        }
    }
}

inline PairedSequences read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path.string());
    PairedSequences data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::size_t s, i;
        int ri, pi;
        double xr, xi, yr, yi;
        // %la so hex float fields parse exactly
        if (std::sscanf(line.c_str(), "%zu %zu %d %d %la %la %la %la", &s, &i, &ri, &pi, &xr,
                        &xi, &yr, &yi) != 8)
            throw std::runtime_error("read_dataset: malformed row: " + line);
        if (s >= data.size()) data.resize(s + 1);
        auto& [x, y] = data[s];
        if (i != x.size()) throw std::runtime_error("read_dataset: out-of-order row: " + line);
        x.radius_idx.push_back(ri);
        x.phase_idx.push_back(pi);
        x.values.emplace_back(xr, xi);
        y.emplace_back(yr, yi);
    }
    if (data.empty()) throw std::runtime_error("read_dataset: no records in " + path.string());
    return data;
}

// One row per symbol, tab-separated probabilities; downstream inspection format.
inline void write_posterior_tsv(const std::filesystem::path& path, const PosteriorTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_posterior_tsv: cannot open " + path.string());
    char buf[32];
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const auto row = table.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.12g", row[j]);
            out << (j ? "\t" : "") << buf;
        }
        out << "\n";
    }
}

}  // namespace sicfiber
