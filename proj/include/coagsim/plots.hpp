#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace coagsim {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
};

/// Fixed-size SVG line chart. Output depends only on the inputs, so identical
/// data gives byte-identical files. Non-finite points (and nonpositive ones on
/// a log axis) are skipped.
void write_line_chart(std::ostream& os, const ChartSpec& spec, const std::vector<Series>& series);

/// Header plus numeric rows of a comma-separated file.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; -1 when absent.
  std::ptrdiff_t column(const std::string& name) const;
  std::vector<double> values(std::size_t col) const;
};

/// Reads a CSV whose first non-comment line is the header; lines starting
/// with '#' are skipped. Throws IoError on a missing file or a bad number.
CsvTable read_csv_table(const std::filesystem::path& path);

/// Charts for one run directory: moments.svg and gel_mass.svg from
/// moments.csv, localization.svg from localization.csv. Returns the written
/// file names; `notes` collects the reasons for every chart skipped.
std::vector<std::string> emit_plots(const std::filesystem::path& run_dir, std::vector<std::string>& notes);

}  // namespace coagsim
