#ifndef WELFARE_CSV_HPP
#define WELFARE_CSV_HPP

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/json_writer.hpp"

namespace welfare {

// One ingested row: a group identifier, an effect value, and a sampling
// weight.  Weights are normalized to total one across rows; a file without
// a weight column yields uniform 1/K.
struct CateRow {
    std::string group_id;
    double tau_hat = 0.0;
    double weight = 1.0;
};

struct CateTable {
    std::vector<CateRow> rows;
    bool has_weight = false;
};

namespace detail {

inline std::string trim_field(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim_field(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim_field(cur));
    return out;
}

inline double parse_double_field(const std::string& field, const std::string& what,
                                 std::size_t line_no) {
    if (field.empty()) {
        throw NonFiniteValue("line " + std::to_string(line_no) + ": empty " + what);
    }
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size()) {
        throw NonFiniteValue("line " + std::to_string(line_no) + ": cannot parse " + what +
                             " '" + field + "'");
    }
    if (!std::isfinite(v)) {
        throw NonFiniteValue("line " + std::to_string(line_no) + ": " + what +
                             " must be finite");
    }
    return v;
}

} // namespace detail

/*!
 * Reads a CSV whose header is exactly `group_id,tau_hat` or
 * `group_id,tau_hat,weight`.  Weights must be positive and values finite.
 * With `allow_duplicate_ids` false (group-level data), a repeated id is an
 * error; with it true (micro data), repeats are expected.
 */
inline CateTable ingest_cate_csv(const std::string& path, bool allow_duplicate_ids = false) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw BadHeader("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = detail::split_csv_line(line);
    CateTable table;
    if (header.size() == 2 && header[0] == "group_id" && header[1] == "tau_hat") {
        table.has_weight = false;
    } else if (header.size() == 3 && header[0] == "group_id" && header[1] == "tau_hat" &&
               header[2] == "weight") {
        table.has_weight = true;
    } else {
        throw BadHeader("'" + path + "' must start with 'group_id,tau_hat[,weight]', got '" +
                        line + "'");
    }

    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    std::size_t want = table.has_weight ? 3 : 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != want) {
            throw IoError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(want) + " fields, got " +
                          std::to_string(fields.size()));
        }
        CateRow row;
        row.group_id = fields[0];
        if (row.group_id.empty()) {
            throw IoError("line " + std::to_string(line_no) + ": empty group_id");
        }
        row.tau_hat = detail::parse_double_field(fields[1], "tau_hat", line_no);
        if (table.has_weight) {
            row.weight = detail::parse_double_field(fields[2], "weight", line_no);
            if (!(row.weight > 0.0)) {
                throw NonPositiveWeight("line " + std::to_string(line_no) +
                                        ": weight must be positive");
            }
        }
        if (!allow_duplicate_ids && !seen.insert(row.group_id).second) {
            throw DuplicateGroupId("line " + std::to_string(line_no) + ": group_id '" +
                                   row.group_id + "' appears more than once");
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw EmptySample("'" + path + "' has a header but no rows");
    double total = 0.0;
    for (const auto& row : table.rows) total += row.weight;
    for (auto& row : table.rows) row.weight /= total;
    return table;
}

// Rows regrouped by id in order of first appearance; mass is the summed
// weight of the group's rows.
struct GroupedCate {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> draws;
    std::vector<std::vector<double>> draw_weights;
    std::vector<double> mass;

    double group_mean(std::size_t g) const {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < draws[g].size(); ++i) {
            num += draw_weights[g][i] * draws[g][i];
            den += draw_weights[g][i];
        }
        return num / den;
    }
};

inline GroupedCate group_by_id(const CateTable& table) {
    GroupedCate out;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& row : table.rows) {
        auto [it, inserted] = index.try_emplace(row.group_id, out.ids.size());
        if (inserted) {
            out.ids.push_back(row.group_id);
            out.draws.emplace_back();
            out.draw_weights.emplace_back();
            out.mass.push_back(0.0);
        }
        std::size_t g = it->second;
        out.draws[g].push_back(row.tau_hat);
        out.draw_weights[g].push_back(row.weight);
        out.mass[g] += row.weight;
    }
    return out;
}

inline std::string format_full_precision(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_curve_csv(const std::string& path, const std::vector<double>& levels,
                            const std::vector<double>& values) {
    if (levels.size() != values.size()) {
        throw LengthMismatch("levels and values differ in length");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "level,value\n";
    for (std::size_t i = 0; i < levels.size(); ++i) {
        out << format_full_precision(levels[i]) << ',' << format_full_precision(values[i])
            << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

// Writes a level/value curve as CSV or as a JSON array of {level, value}.
inline void emit_curve(const std::vector<double>& levels, const std::vector<double>& values,
                       const std::string& path, const std::string& format) {
    if (levels.empty()) throw BadConfig("curve grid is empty");
    if (levels.size() != values.size()) {
        throw LengthMismatch("levels and values differ in length");
    }
    if (format == "csv") {
        write_curve_csv(path, levels, values);
        return;
    }
    if (format != "json") throw BadConfig("curve format must be 'csv' or 'json'");
    JsonWriter w;
    w.begin_array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        w.begin_object();
        w.key("level");
        w.value(levels[i]);
        w.key("value");
        w.value(values[i]);
        w.end_object();
    }
    w.end_array();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << w.str() << '\n';
    if (!out) throw IoError("failed while writing '" + path + "'");
}

} // namespace welfare

#endif
