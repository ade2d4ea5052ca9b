#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "galab/error.hpp"
#include "galab/report.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(FormatNumber, NineSignificantDigits) {
  EXPECT_EQ(galab::format_number(1.0), "1");
  EXPECT_EQ(galab::format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(galab::format_number(-123456789.123), "-123456789");
  EXPECT_EQ(galab::format_number(2.5e-12), "2.5e-12");
  EXPECT_EQ(galab::format_number(-0.0), "0");
  EXPECT_EQ(galab::format_number(std::nan("")), "nan");
}

TEST(CsvWriter, HeaderAndRows) {
  const auto path = fs::temp_directory_path() / "galab_csv_test.csv";
  {
    galab::CsvWriter w(path.string(), {"a", "b", "c"});
    w.cell(1.5).cell("x").cell(true);
    w.end_row();
    w.cell(2.0);
    EXPECT_THROW(w.end_row(), galab::Error);
  }
  const auto text = slurp(path);
  EXPECT_EQ(text.substr(0, text.find("2")), "a,b,c\n1.5,x,true\n");
  fs::remove(path);
}

TEST(Svg, WritesCurvesAndBands) {
  const auto path = fs::temp_directory_path() / "galab_svg_test.svg";
  galab::CurveSeries s{"gd3", {0, 1, 2}, {-1000, -500, -150}, {50, 40, 10}};
  galab::CurveSeries t{"td3", {0, 1, 2}, {-900, std::nan(""), -180}, {}};
  galab::write_learning_curve_svg(path.string(), "Pendulum", "steps", "return", {s, t});
  const auto text = slurp(path);
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_NE(text.find("gd3"), std::string::npos);
  EXPECT_NE(text.find("td3"), std::string::npos);
  EXPECT_NE(text.find("<polygon"), std::string::npos);
  fs::remove(path);
}
