#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fdvi/io.hpp"
#include "fdvi/rng.hpp"

using namespace fdvi;

namespace {
std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("fdvi_io_" + name)).string();
}
}  // namespace

TEST(Io, CsvRoundTripIsExact) {
    Eigen::MatrixXd m = standard_normal_matrix(1, 50, 4);
    m(0, 0) = 1e-300;
    m(1, 1) = -123456789.123456789;
    m(2, 2) = std::numeric_limits<double>::denorm_min();
    const auto path = tmp_path("roundtrip.csv");
    io::write_csv(path, {"a", "b", "c", "d"}, m);
    const auto t = io::read_csv(path);
    ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c", "d"}));
    ASSERT_EQ(t.values.rows(), 50);
    for (Eigen::Index i = 0; i < 50; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) ASSERT_EQ(t.values(i, j), m(i, j));
}

TEST(Io, FormatParseRoundTrip) {
    for (std::uint64_t c = 0; c < 1000; ++c) {
        const double v = counter_normal(8, c) * std::pow(10.0, static_cast<double>(c % 40) - 20.0);
        ASSERT_EQ(io::parse_double(io::format_double(v)), v);
    }
}

TEST(Io, RejectsMalformedCells) {
    const auto path = tmp_path("bad.csv");
    {
        std::ofstream out(path);
        out << "a,b\n1,2\n3,x\n";
    }
    EXPECT_THROW(io::read_csv(path), std::invalid_argument);
    {
        std::ofstream out(path);
        out << "a,b\n1,2\n3\n";
    }
    EXPECT_THROW(io::read_csv(path), std::invalid_argument);
    EXPECT_THROW(io::read_csv(tmp_path("missing.csv")), std::invalid_argument);
    EXPECT_THROW(io::parse_double("1.0abc"), std::invalid_argument);
}

TEST(Io, TextTableRoundTrip) {
    const auto path = tmp_path("table.csv");
    io::TextRows rows{{"fisher", io::format_double(0.1)}, {"jj", io::format_double(2.5e-7)}};
    io::write_table(path, {"method", "value"}, rows);
    std::vector<std::string> header;
    const auto back = io::read_table(path, header);
    EXPECT_EQ(header, (std::vector<std::string>{"method", "value"}));
    EXPECT_EQ(back, rows);
    EXPECT_EQ(io::parse_double(back[1][1]), 2.5e-7);
}

TEST(Io, JsonMatrixRoundTrip) {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const auto j = io::to_json_row_major(m);
    EXPECT_EQ(j.dump(), "[1.0,2.0,3.0,4.0,5.0,6.0]");
    EXPECT_EQ(io::matrix_from_json_row_major(j, 2), m);
    EXPECT_THROW(io::matrix_from_json_row_major(j, 4), std::invalid_argument);
}
