#pragma once

// Wire formats: boxes as JSON objects {lower, upper, lower_closed,
// upper_closed}, lattice bases as row-major CSV blocks, and a small CSV table
// writer with fixed %.17g formatting so identical runs produce identical bytes.

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclat/homspace.hpp"

namespace fraclat {

inline nlohmann::json box_to_json(const Box& box) {
    nlohmann::json j;
    j["lower"] = std::vector<double>(box.lower.data(), box.lower.data() + box.lower.size());
    j["upper"] = std::vector<double>(box.upper.data(), box.upper.data() + box.upper.size());
    j["lower_closed"] = box.lower_closed;
    j["upper_closed"] = box.upper_closed;
    return j;
}

inline Box box_from_json(const nlohmann::json& j) {
    for (const auto& [key, _] : j.items())
        if (key != "lower" && key != "upper" && key != "lower_closed" && key != "upper_closed")
            throw std::invalid_argument("box_from_json: unknown field '" + key + "'");
    const auto lower = j.at("lower").get<std::vector<double>>();
    const auto upper = j.at("upper").get<std::vector<double>>();
    std::vector<bool> lc(lower.size(), true), uc(lower.size(), true);
    if (j.contains("lower_closed")) lc = j.at("lower_closed").get<std::vector<bool>>();
    if (j.contains("upper_closed")) uc = j.at("upper_closed").get<std::vector<bool>>();
    Eigen::VectorXd lo(static_cast<Eigen::Index>(lower.size()));
    Eigen::VectorXd up(static_cast<Eigen::Index>(upper.size()));
    for (std::size_t i = 0; i < lower.size(); ++i) lo[static_cast<Eigen::Index>(i)] = lower[i];
    for (std::size_t i = 0; i < upper.size(); ++i) up[static_cast<Eigen::Index>(i)] = upper[i];
    return Box(lo, up, lc, uc);
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Row-major CSV block, one matrix row per line.
inline std::string basis_to_csv(const LatticeBasis& basis) {
    std::ostringstream out;
    const auto& m = basis.columns;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_g17(m(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline LatticeBasis basis_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("basis_from_csv: empty block");
    const std::size_t n = rows.size();
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw std::invalid_argument("basis_from_csv: ragged rows");
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return LatticeBasis(m);
}

// Minimal CSV table with deterministic float formatting.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size())
            throw std::invalid_argument("CsvWriter: row width mismatch");
        rows_.push_back(cells);
    }

    static std::string cell(double v) { return format_g17(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }

    std::string str() const {
        std::ostringstream out;
        for (std::size_t j = 0; j < header_.size(); ++j) {
            if (j) out << ',';
            out << header_[j];
        }
        out << '\n';
        for (const auto& r : rows_) {
            for (std::size_t j = 0; j < r.size(); ++j) {
                if (j) out << ',';
                out << r[j];
            }
            out << '\n';
        }
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("CsvWriter: cannot open " + path);
        f << str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace fraclat
