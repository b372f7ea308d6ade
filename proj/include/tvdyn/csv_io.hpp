#ifndef TVDYN_CSV_IO_HPP
#define TVDYN_CSV_IO_HPP

// Plain CSV for observation and truth matrices (rows = series, columns =
// time, empty cell = missing) and a station-table reader for daily
// weather summaries.

#include "model.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tvdyn {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), "csv: not a number: '" + std::string(s) + "'");
    return v;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.emplace_back(trim(cur));
    return out;
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "cannot open '" + path + "' for reading");
    return is;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "cannot open '" + path + "' for writing");
    return os;
}

}  // namespace detail

/// Dense matrix, one line per row.
inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_double(m(i, j));
        }
        os << '\n';
    }
}

inline Matrix read_matrix_csv(std::istream& is) {
    const auto rows = detail::read_csv_rows(is);
    const Index r = static_cast<Index>(rows.size()), c = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        require(static_cast<Index>(rows[i].size()) == c, "csv: ragged rows");
        for (Index j = 0; j < c; ++j) m(i, j) = parse_double(rows[i][j]);
    }
    return m;
}

/// Observed cells as numbers, missing cells empty.
inline void write_observations_csv(std::ostream& os, const ObservationSet& y) {
    for (Index m = 0; m < y.rows(); ++m) {
        for (Index n = 0; n < y.cols(); ++n) {
            if (n) os << ',';
            if (y.observed(m, n)) os << format_double(y.value(m, n));
        }
        os << '\n';
    }
}

/// Empty cells, "NA" and "nan" are missing.
inline ObservationSet read_observations_csv(std::istream& is) {
    const auto rows = detail::read_csv_rows(is);
    const Index r = static_cast<Index>(rows.size()), c = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
    Matrix v = Matrix::Zero(r, c);
    Mask obs = Mask::Constant(r, c, false);
    for (Index i = 0; i < r; ++i) {
        require(static_cast<Index>(rows[i].size()) == c, "csv: ragged rows");
        for (Index j = 0; j < c; ++j) {
            const auto& cell = rows[i][j];
            if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN") continue;
            v(i, j) = parse_double(cell);
            obs(i, j) = true;
        }
    }
    return ObservationSet(v, obs);
}

inline void save_observations_csv(const std::string& path, const ObservationSet& y) {
    auto os = detail::open_out(path);
    write_observations_csv(os, y);
}
inline ObservationSet load_observations_csv(const std::string& path) {
    auto is = detail::open_in(path);
    return read_observations_csv(is);
}
inline void save_matrix_csv(const std::string& path, const Matrix& m) {
    auto os = detail::open_out(path);
    write_matrix_csv(os, m);
}
inline Matrix load_matrix_csv(const std::string& path) {
    auto is = detail::open_in(path);
    return read_matrix_csv(is);
}

// ---------------------------------------------------------------------------
// Station tables

struct StationTableOptions {
    /// Cell values treated as missing, besides the empty cell.
    std::vector<std::string> missing_markers{"NA", "9999.9"};
    /// Stations with a larger fraction of missing days are dropped.
    double max_missing_fraction = 0.2;
};

struct StationTable {
    std::vector<std::string> stations;  // kept station ids, in file order
    std::vector<std::string> days;      // column labels
    ObservationSet data;                // kept stations x days
    std::vector<std::string> dropped;   // ids removed by the missing-data rule
};

/// Reads a header line `station,<day>,<day>,...` followed by one line per
/// station: `<id>,<value>,...`.
inline StationTable read_station_table(std::istream& is, const StationTableOptions& opt = {}) {
    const auto rows = detail::read_csv_rows(is);
    require(!rows.empty(), "station table: missing header");
    StationTable out;
    out.days.assign(rows[0].begin() + 1, rows[0].end());
    const Index n_days = static_cast<Index>(out.days.size());
    auto is_missing = [&](const std::string& cell) {
        if (cell.empty()) return true;
        for (const auto& mk : opt.missing_markers)
            if (cell == mk) return true;
        return false;
    };
    std::vector<Vector> vals;
    std::vector<std::vector<bool>> obs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        require(static_cast<Index>(row.size()) == n_days + 1, "station table: row '" + row[0] + "' has wrong length");
        Vector v = Vector::Zero(n_days);
        std::vector<bool> o(n_days, false);
        Index missing = 0;
        for (Index j = 0; j < n_days; ++j) {
            const auto& cell = row[j + 1];
            if (is_missing(cell)) {
                ++missing;
            } else {
                v[j] = parse_double(cell);
                o[j] = true;
            }
        }
        if (n_days > 0 && static_cast<double>(missing) > opt.max_missing_fraction * static_cast<double>(n_days)) {
            out.dropped.push_back(row[0]);
            continue;
        }
        out.stations.push_back(row[0]);
        vals.push_back(std::move(v));
        obs.push_back(std::move(o));
    }
    const Index M = static_cast<Index>(vals.size());
    Matrix v(M, n_days);
    Mask o(M, n_days);
    for (Index m = 0; m < M; ++m)
        for (Index j = 0; j < n_days; ++j) {
            v(m, j) = vals[m][j];
            o(m, j) = obs[m][j];
        }
    out.data = ObservationSet(v, o);
    return out;
}

inline void write_station_table(std::ostream& os, const std::vector<std::string>& stations,
                                const std::vector<std::string>& days, const ObservationSet& y,
                                const std::string& missing_marker = "9999.9") {
    require(static_cast<Index>(stations.size()) == y.rows() && static_cast<Index>(days.size()) == y.cols(),
            "station table: label counts do not match the data");
    os << "station";
    for (const auto& d : days) os << ',' << d;
    os << '\n';
    for (Index m = 0; m < y.rows(); ++m) {
        os << stations[m];
        for (Index n = 0; n < y.cols(); ++n) os << ',' << (y.observed(m, n) ? format_double(y.value(m, n)) : missing_marker);
        os << '\n';
    }
}

inline StationTable load_station_table(const std::string& path, const StationTableOptions& opt = {}) {
    auto is = detail::open_in(path);
    return read_station_table(is, opt);
}

}  // namespace tvdyn

#endif  // TVDYN_CSV_IO_HPP
