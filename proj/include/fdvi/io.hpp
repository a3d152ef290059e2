#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace fdvi::io {

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Numeric CSV with one header row. Throws std::invalid_argument on ragged
/// rows or unparsable cells.
CsvTable read_csv(const std::string& path);

/// Values are written in shortest round-trip form so they re-parse exactly.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Mixed text/number CSV; numbers should be pre-formatted with format_double.
using TextRows = std::vector<std::vector<std::string>>;
void write_table(const std::string& path, const std::vector<std::string>& header, const TextRows& rows);
/// Returns the header in `header` and the data rows.
TextRows read_table(const std::string& path, std::vector<std::string>& header);

/// Strict full-string parse; throws std::invalid_argument.
double parse_double(const std::string& s);

/// Shortest round-tripping decimal form of `v`.
std::string format_double(double v);

nlohmann::json to_json(const Eigen::VectorXd& v);
/// Row-major flat array.
nlohmann::json to_json_row_major(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
Eigen::MatrixXd matrix_from_json_row_major(const nlohmann::json& j, Eigen::Index rows);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace fdvi::io
