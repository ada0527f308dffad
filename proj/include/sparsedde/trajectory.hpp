#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsedde/errors.hpp"

namespace sparsedde {

/// Shortest round-trip decimal rendering of a double. Used everywhere a
/// number is written to CSV/JSON so re-runs are byte-identical.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string &where) {
    double v = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ConfigError(where + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

/// Uniformly sampled multivariate state time series.
struct TrajectoryData {
    double dt = 0.0;
    double t0 = 0.0;
    Eigen::MatrixXd states;                       // N x m
    std::optional<Eigen::MatrixXd> derivatives;   // N x m when present

    Eigen::Index n() const { return states.rows(); }
    Eigen::Index dim() const { return states.cols(); }
    double time(Eigen::Index i) const { return t0 + static_cast<double>(i) * dt; }

    void validate() const {
        if (dt <= 0.0) throw Error("TrajectoryData: dt must be > 0");
        if (states.rows() < 2) throw Error("TrajectoryData: need at least 2 samples");
        if (!states.allFinite()) throw Error("TrajectoryData: non-finite state entry");
        if (derivatives) {
            if (derivatives->rows() != states.rows() || derivatives->cols() != states.cols())
                throw Error("TrajectoryData: derivative shape mismatch");
            if (!derivatives->allFinite()) throw Error("TrajectoryData: non-finite derivative entry");
        }
    }
};

/// CSV layout: header `t,x1..xm[,dx1..dxm]`, one row per sample.
inline void write_trajectory_csv(std::ostream &os, const TrajectoryData &traj) {
    const Eigen::Index m = traj.dim();
    os << "t";
    for (Eigen::Index j = 0; j < m; ++j) os << ",x" << (j + 1);
    if (traj.derivatives)
        for (Eigen::Index j = 0; j < m; ++j) os << ",dx" << (j + 1);
    os << "\n";
    for (Eigen::Index i = 0; i < traj.n(); ++i) {
        os << format_double(traj.time(i));
        for (Eigen::Index j = 0; j < m; ++j) os << "," << format_double(traj.states(i, j));
        if (traj.derivatives)
            for (Eigen::Index j = 0; j < m; ++j) os << "," << format_double((*traj.derivatives)(i, j));
        os << "\n";
    }
}

inline void write_trajectory_csv(const std::string &path, const TrajectoryData &traj) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    write_trajectory_csv(f, traj);
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline TrajectoryData read_trajectory_csv(std::istream &is, const std::string &name = "<csv>") {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError(name + ": empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "t")
        throw ConfigError(name + ": first column must be 't'");
    Eigen::Index m = 0;
    while (1 + m < static_cast<Eigen::Index>(header.size()) &&
           header[1 + m] == "x" + std::to_string(m + 1))
        ++m;
    if (m == 0) throw ConfigError(name + ": no state columns (x1..)");
    bool has_deriv = false;
    if (static_cast<Eigen::Index>(header.size()) == 1 + 2 * m) {
        has_deriv = true;
        for (Eigen::Index j = 0; j < m; ++j)
            if (header[1 + m + j] != "dx" + std::to_string(j + 1))
                throw ConfigError(name + ": malformed derivative columns");
    } else if (static_cast<Eigen::Index>(header.size()) != 1 + m) {
        throw ConfigError(name + ": malformed header");
    }

    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto &c : cells)
            row.push_back(parse_double(c, name + ":" + std::to_string(lineno)));
        times.push_back(row[0]);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ConfigError(name + ": need at least 2 data rows");

    TrajectoryData traj;
    traj.t0 = times.front();
    traj.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    traj.states.resize(n, m);
    if (has_deriv) traj.derivatives.emplace(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            traj.states(i, j) = rows[i][1 + j];
            if (has_deriv) (*traj.derivatives)(i, j) = rows[i][1 + m + j];
        }
    }
    traj.validate();
    return traj;
}

inline TrajectoryData read_trajectory_csv(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open data file: " + path);
    return read_trajectory_csv(f, path);
}

} // namespace sparsedde
