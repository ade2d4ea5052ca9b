#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace galab {

/// Shortest round-trip-free rendering with 9 significant digits ("%.9g").
std::string format_number(double v);

/// Comma-separated writer with a fixed header. Numbers go through
/// format_number; strings are written verbatim (no quoting).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(double v);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(const char* s) { return cell(std::string(s)); }
  CsvWriter& cell(bool b) { return cell(std::string(b ? "true" : "false")); }
  /// Ends the current row; throws if its width differs from the header.
  void end_row();
  void close();

 private:
  std::ofstream os_;
  std::string path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// One line of a learning-curve plot with an optional +-std band.
struct CurveSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;  // empty or same length as mean
};

/// Writes a self-contained SVG line plot; non-finite points are skipped.
void write_learning_curve_svg(const std::string& path, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              const std::vector<CurveSeries>& series);

}  // namespace galab
