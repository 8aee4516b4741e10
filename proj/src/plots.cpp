#include "coagsim/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "coagsim/errors.hpp"

namespace coagsim {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"};

std::string num(double v, const char* f = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

bool usable(double x, double y, bool log_y) { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); }

}  // namespace

void write_line_chart(std::ostream& os, const ChartSpec& spec, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i], spec.log_y)) continue;
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) {
    const double pad = std::max(std::abs(y0) * 0.05, 1e-12);
    y0 -= pad;
    y1 += pad;
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth, "%.0f") << "\" height=\""
     << num(kHeight, "%.0f") << "\" viewBox=\"0 0 " << num(kWidth, "%.0f") << " " << num(kHeight, "%.0f")
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
     << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double yv = y0 + (y1 - y0) * k / 5.0;
    os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
       << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 19) << "\" text-anchor=\"middle\">"
       << num(xv, "%.4g") << "</text>\n";
    os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
       << num(py(yv)) << "\" stroke=\"black\"/>\n";
    const std::string label = spec.log_y ? "1e" + num(yv, "%.3g") : num(yv, "%.4g");
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 16) << "\" text-anchor=\"middle\">"
     << escape(spec.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << num(kTop + ph / 2) << ")\">" << escape(spec.y_label) << (spec.log_y ? " (log10)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      if (!usable(ser.x[i], ser.y[i], spec.log_y)) continue;
      const double y = spec.log_y ? std::log10(ser.y[i]) : ser.y[i];
      os << (first ? "" : " ") << num(px(ser.x[i])) << "," << num(py(y));
      first = false;
    }
    os << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kLeft + pw + 36)
       << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(kLeft + pw + 42) << "\" y=\"" << num(ly) << "\">" << escape(ser.name) << "</text>\n";
  }
  os << "</svg>\n";
}

std::ptrdiff_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : it - header.begin();
}

std::vector<double> CsvTable::values(std::size_t col) const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(col < r.size() ? r[col] : std::numeric_limits<double>::quiet_NaN());
  return v;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable tab;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      tab.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != tab.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(tab.header.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    tab.rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError(path.string() + ": missing header row");
  return tab;
}

std::vector<std::string> emit_plots(const std::filesystem::path& run_dir, std::vector<std::string>& notes) {
  std::vector<std::string> written;
  auto write = [&](const std::string& file, const ChartSpec& spec, const std::vector<Series>& series) {
    std::ofstream out(run_dir / file, std::ios::binary);
    if (!out) throw IoError("cannot write " + (run_dir / file).string());
    write_line_chart(out, spec, series);
    written.push_back(file);
  };

  const auto moments_path = run_dir / "moments.csv";
  if (!std::filesystem::exists(moments_path)) {
    notes.push_back(run_dir.filename().string() + ": moments.csv missing, no moment or gel charts");
  } else {
    const auto tab = read_csv_table(moments_path);
    const auto tcol = tab.column("t");
    if (tab.rows.empty() || tcol < 0) {
      notes.push_back(run_dir.filename().string() + ": empty trajectory, no charts");
    } else {
      const auto ts = tab.values(static_cast<std::size_t>(tcol));
      std::vector<Series> ms;
      for (std::size_t c = 0; c < tab.header.size(); ++c) {
        const auto& h = tab.header[c];
        if (h.size() > 1 && h[0] == 'M' && h.find("_sd") == std::string::npos) ms.push_back({h, ts, tab.values(c)});
      }
      if (ms.empty()) {
        notes.push_back(run_dir.filename().string() + ": no moment columns, moments chart skipped");
      } else {
        write("moments.svg", {"Moments", "t", "M_alpha", false}, ms);
      }
      if (const auto g = tab.column("gel_mass"); g >= 0) {
        write("gel_mass.svg", {"Gel mass", "t", "mass beyond truncation", false},
              {{"gel_mass", ts, tab.values(static_cast<std::size_t>(g))}});
      } else {
        notes.push_back(run_dir.filename().string() + ": no gel_mass column, gel chart skipped");
      }
    }
  }
  const auto loc_path = run_dir / "localization.csv";
  if (std::filesystem::exists(loc_path)) {
    const auto tab = read_csv_table(loc_path);
    const auto tcol = tab.column("t");
    const auto dcol = tab.column("D");
    if (tab.rows.empty() || tcol < 0 || dcol < 0) {
      notes.push_back(run_dir.filename().string() + ": localization series empty, chart skipped");
    } else {
      write("localization.svg", {"Localization deficit", "t", "D(t)", false},
            {{"D", tab.values(static_cast<std::size_t>(tcol)), tab.values(static_cast<std::size_t>(dcol))}});
    }
  }
  return written;
}

}  // namespace coagsim
