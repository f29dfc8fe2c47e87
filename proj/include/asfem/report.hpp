#pragma once

// CSV serialization of adaptive runs and log-log slope fits.

#include "asfem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace asfem {

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{"iter",       "dofs_trial", "dofs_test",   "dofs_total", "est_energy",
                                               "err_L2_rel", "err_triple", "err_qoi_rel", "saturation", "marked"};
    return cols;
}

inline void write_csv(std::ostream& os, const std::vector<AdaptRecord>& records) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n' << std::setprecision(12);
    for (const auto& r : records) {
        os << r.iter << ',' << r.dofs_trial << ',' << r.dofs_test << ',' << r.dofs_total << ',' << r.est_energy << ','
           << r.err_L2_rel << ',' << r.err_triple << ',' << r.err_qoi_rel << ',' << r.saturation << ',' << r.marked
           << '\n';
    }
}

inline void write_csv(const std::string& path, const std::vector<AdaptRecord>& records) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_csv(os, records);
}

/// Column-oriented numeric table; "nan" and empty cells read as NaN.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::invalid_argument("no column '" + name + "'");
        return static_cast<int>(it - header.begin());
    }
};

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(item);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) throw std::runtime_error("read_csv: ragged row '" + line + "'");
        std::vector<double> row;
        for (const auto& c : cells) {
            if (c.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                throw std::runtime_error("read_csv: non-numeric cell '" + c + "'");
            }
            if (used != c.size()) throw std::runtime_error("read_csv: non-numeric cell '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_csv(is);
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("slope: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("slope: need at least two points");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument("slope: values must be positive and finite");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("slope: x values are all equal");
    return sxy / sxx;
}

/// Slope over the last `window` rows (all rows when the table is shorter).
inline double slope(const Table& t, const std::string& xcol, const std::string& ycol, int window = 5) {
    if (window < 2) throw std::invalid_argument("slope: window must be >= 2");
    const int ix = t.column(xcol), iy = t.column(ycol);
    const std::size_t start = t.rows.size() > static_cast<std::size_t>(window) ? t.rows.size() - window : 0;
    std::vector<double> x, y;
    for (std::size_t r = start; r < t.rows.size(); ++r) {
        x.push_back(t.rows[r][ix]);
        y.push_back(t.rows[r][iy]);
    }
    return loglog_slope(x, y);
}

inline double slope(const std::string& csv_path, const std::string& xcol, const std::string& ycol, int window = 5) {
    return slope(read_csv(csv_path), xcol, ycol, window);
}

}  // namespace asfem
