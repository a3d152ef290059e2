#include "fdvi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fdvi::io {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
    }
    return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    table.header = split(line);
    std::vector<double> flat;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != table.header.size()) {
            throw std::invalid_argument(path + ": line " + std::to_string(line_no) + " has " +
                                        std::to_string(cells.size()) + " fields, expected " +
                                        std::to_string(table.header.size()));
        }
        for (const auto& c : cells) flat.push_back(parse_cell(c, line_no));
        ++rows;
    }
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    table.values.resize(static_cast<Eigen::Index>(rows), cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            table.values(static_cast<Eigen::Index>(i), j) = flat[i * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)];
        }
    }
    return table;
}

void write_table(const std::string& path, const std::vector<std::string>& header, const TextRows& rows) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::invalid_argument("write_table: ragged row");
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
}

TextRows read_table(const std::string& path, std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    header = split(line);
    TextRows rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split(line));
        if (rows.back().size() != header.size()) throw std::invalid_argument(path + ": ragged row");
    }
    return rows;
}

double parse_double(const std::string& s) { return parse_cell(s, 0); }

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
        throw std::invalid_argument("write_csv: header/column count mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            out << (j ? "," : "") << format_double(values(i, j));
        }
        out << '\n';
    }
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

nlohmann::json to_json_row_major(const Eigen::MatrixXd& m) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    }
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json_row_major(const nlohmann::json& j, Eigen::Index rows) {
    const auto total = static_cast<Eigen::Index>(j.size());
    if (rows <= 0 || total % rows != 0) throw std::invalid_argument("matrix JSON has wrong length");
    const Eigen::Index cols = total / rows;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(static_cast<std::size_t>(i * cols + c)).get<double>();
    }
    return m;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return nlohmann::json::parse(in);
}

}  // namespace fdvi::io
