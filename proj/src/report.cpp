#include "sjscc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sjscc::eval {

namespace {

namespace fs = std::filesystem;

/// Round-trip-exact double formatting, shared by every table column.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot write " + path.string());
  return out;
}

void metric_columns(std::ostream& out, const PointMetrics& p) {
  out << p.samples << ',' << fmt(p.mean_ssim) << ',' << fmt(p.ssim_se) << ','
      << fmt(p.mean_mse) << ',' << fmt(p.mse_se) << ','
      << fmt(p.mean_solo_accuracy) << ',' << fmt(p.solo_accuracy_se()) << ','
      << fmt(p.colluded_accuracy) << ',' << fmt(p.colluded_accuracy_se());
}

constexpr const char* kMetricHeader =
    "samples,mean_ssim,ssim_se,mean_mse,mse_se,"
    "mean_solo_accuracy,solo_accuracy_se,colluded_accuracy,colluded_accuracy_se";

/// Minimal line-plot canvas: fixed margins, clamped [0,1] y axis.
struct Canvas {
  static constexpr double kW = 640, kH = 420;
  static constexpr double kL = 62, kR = 18, kT = 34, kB = 52;
  double x_min = 0, x_max = 1;

  double px(double x) const {
    const double span = x_max > x_min ? x_max - x_min : 1.0;
    return kL + (x - x_min) / span * (kW - kL - kR);
  }
  double py(double y) const {
    const double c = std::clamp(y, 0.0, 1.0);
    return kH - kB - c * (kH - kT - kB);
  }
};

void svg_open(std::ostream& out, double w, double h, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2
      << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << title << "</text>\n";
}

void svg_axes(std::ostream& out, const Canvas& c, const std::string& x_label) {
  out << "<line x1=\"" << c.kL << "\" y1=\"" << c.kH - c.kB << "\" x2=\""
      << c.kW - c.kR << "\" y2=\"" << c.kH - c.kB
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << c.kL << "\" y1=\"" << c.kT << "\" x2=\"" << c.kL
      << "\" y2=\"" << c.kH - c.kB << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    const double y = c.py(v);
    out << "<line x1=\"" << c.kL - 4 << "\" y1=\"" << y << "\" x2=\"" << c.kL
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << c.kL - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt3(v) << "</text>\n";
  }
  out << "<text x=\"" << (c.kL + c.kW - c.kR) / 2 << "\" y=\"" << c.kH - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
}

void svg_series(std::ostream& out, const Canvas& c, const std::vector<double>& xs,
                const std::vector<double>& ys, const std::string& color) {
  out << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ' ';
    out << fmt3(c.px(xs[i])) << ',' << fmt3(c.py(ys[i]));
  }
  out << "\"/>\n";
  for (size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << fmt3(c.px(xs[i])) << "\" cy=\""
        << fmt3(c.py(ys[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
}

void svg_legend(std::ostream& out, const Canvas& c,
                const std::vector<std::pair<std::string, std::string>>& entries) {
  double y = c.kT + 8;
  for (const auto& [label, color] : entries) {
    out << "<rect x=\"" << c.kW - 180 << "\" y=\"" << y - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n"
        << "<text x=\"" << c.kW - 162 << "\" y=\"" << y + 2
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << label
        << "</text>\n";
    y += 18;
  }
}

}  // namespace

void emit_sweep(const SweepResult& r, const std::string& out_dir) {
  const fs::path dir(out_dir);
  const size_t m =
      r.points.empty() ? 0 : r.points.front().solo_accuracy.size();

  auto csv = open_out(dir / "data.csv");
  csv << "family,nakagami_m,gamma_b_db,gamma_e_db," << kMetricHeader;
  for (size_t j = 0; j < m; ++j) csv << ",solo_accuracy_" << j;
  csv << '\n';
  for (size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    csv << family_name(r.family) << ',' << fmt(r.nakagami_m) << ','
        << fmt(r.gamma_b_db[i]) << ',' << fmt(r.gamma_e_db[i]) << ',';
    metric_columns(csv, p);
    for (double a : p.solo_accuracy) csv << ',' << fmt(a);
    csv << '\n';
  }
  csv << "# accuracy_spearman=" << fmt(r.accuracy_spearman)
      << " accuracy_range=" << fmt(r.accuracy_range)
      << " config_fp=" << r.config_fp << '\n';

  Canvas c;
  if (!r.gamma_e_db.empty()) {
    const auto [lo, hi] = std::minmax_element(r.gamma_e_db.begin(), r.gamma_e_db.end());
    c.x_min = *lo;
    c.x_max = *hi;
  }
  std::vector<double> acc, ssim;
  for (const auto& p : r.points) {
    acc.push_back(p.mean_solo_accuracy);
    ssim.push_back(p.mean_ssim);
  }
  auto svg = open_out(dir / "plot.svg");
  svg_open(svg, c.kW, c.kH, family_name(r.family) + " sweep, eve 5 dB below bob");
  svg_axes(svg, c, "eavesdropper SNR (dB)");
  for (size_t i = 0; i < r.gamma_e_db.size(); ++i) {
    const double x = c.px(r.gamma_e_db[i]);
    svg << "<line x1=\"" << fmt3(x) << "\" y1=\"" << c.kH - c.kB << "\" x2=\""
        << fmt3(x) << "\" y2=\"" << c.kH - c.kB + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt3(x) << "\" y=\"" << c.kH - c.kB + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt3(r.gamma_e_db[i]) << "</text>\n";
  }
  svg_series(svg, c, r.gamma_e_db, acc, "#c0392b");
  svg_series(svg, c, r.gamma_e_db, ssim, "#2980b9");
  svg_legend(svg, c,
             {{"mean solo accuracy", "#c0392b"}, {"mean SSIM", "#2980b9"}});
  svg << "</svg>\n";
}

void emit_ablation(const AblationReport& r, const std::string& out_dir) {
  const fs::path dir(out_dir);

  auto csv = open_out(dir / "data.csv");
  csv << "name,m,colluding,w," << kMetricHeader << '\n';
  for (const auto& row : r.rows) {
    csv << row.name << ',' << row.m << ',' << (row.colluding ? 1 : 0) << ','
        << fmt(row.w) << ',';
    metric_columns(csv, row.metrics);
    csv << '\n';
  }

  auto gaps = open_out(dir / "gaps.csv");
  gaps << "m,colluding,accuracy_gap,ssim_gap\n";
  for (const auto& g : r.gaps)
    gaps << g.m << ',' << (g.colluding ? 1 : 0) << ',' << fmt(g.accuracy_gap)
         << ',' << fmt(g.ssim_gap) << '\n';

  const double row_h = 44, bar_w = 380, left = 190;
  const double h = 60 + row_h * static_cast<double>(r.rows.size());
  auto svg = open_out(dir / "plot.svg");
  svg_open(svg, 640, h, "ablation cells, evaluated at the training point");
  double y = 48;
  for (const auto& row : r.rows) {
    const double acc = row.colluding ? row.metrics.colluded_accuracy
                                     : row.metrics.mean_solo_accuracy;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 16
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << row.name << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\""
        << fmt3(std::clamp(acc, 0.0, 1.0) * bar_w)
        << "\" height=\"10\" fill=\"#c0392b\"/>\n"
        << "<text x=\"" << left + bar_w + 6 << "\" y=\"" << y + 9
        << "\" font-family=\"sans-serif\" font-size=\"10\">acc " << fmt3(acc)
        << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << y + 13 << "\" width=\""
        << fmt3(std::clamp(row.metrics.mean_ssim, 0.0, 1.0) * bar_w)
        << "\" height=\"10\" fill=\"#2980b9\"/>\n"
        << "<text x=\"" << left + bar_w + 6 << "\" y=\"" << y + 22
        << "\" font-family=\"sans-serif\" font-size=\"10\">ssim "
        << fmt3(row.metrics.mean_ssim) << "</text>\n";
    y += row_h;
  }
  svg << "</svg>\n";
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("report: cannot read " + path.string());
  return in;
}

/// Consumes the nine shared metric columns starting at tokens[at]; the two
/// stored standard errors of proportions are derived, so they are skipped
/// and recomputed on the next emission.
PointMetrics parse_metric_columns(const std::vector<std::string>& tokens,
                                  size_t at) {
  if (tokens.size() < at + 9)
    throw std::runtime_error("report: malformed metrics row");
  PointMetrics p;
  p.samples = std::strtol(tokens[at].c_str(), nullptr, 10);
  p.mean_ssim = std::strtod(tokens[at + 1].c_str(), nullptr);
  p.ssim_se = std::strtod(tokens[at + 2].c_str(), nullptr);
  p.mean_mse = std::strtod(tokens[at + 3].c_str(), nullptr);
  p.mse_se = std::strtod(tokens[at + 4].c_str(), nullptr);
  p.mean_solo_accuracy = std::strtod(tokens[at + 5].c_str(), nullptr);
  p.colluded_accuracy = std::strtod(tokens[at + 7].c_str(), nullptr);
  return p;
}

}  // namespace

SweepResult read_sweep(const std::string& dir) {
  auto in = open_in(fs::path(dir) / "data.csv");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("report: empty sweep table");
  const auto header = split_csv(line);
  if (header.size() < 13 || header[2] != "gamma_b_db")
    throw std::runtime_error("report: not a sweep table");
  const size_t solo_cols = header.size() - 13;

  SweepResult r;
  bool family_set = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto fp = line.find("config_fp=");
      if (fp != std::string::npos)
        r.config_fp = std::strtoull(line.c_str() + fp + 10, nullptr, 10);
      continue;
    }
    const auto t = split_csv(line);
    if (t.size() != header.size())
      throw std::runtime_error("report: ragged sweep row");
    r.family = family_from_name(t[0]);
    r.nakagami_m = std::strtod(t[1].c_str(), nullptr);
    family_set = true;
    r.gamma_b_db.push_back(std::strtod(t[2].c_str(), nullptr));
    r.gamma_e_db.push_back(std::strtod(t[3].c_str(), nullptr));
    auto p = parse_metric_columns(t, 4);
    for (size_t j = 0; j < solo_cols; ++j)
      p.solo_accuracy.push_back(std::strtod(t[13 + j].c_str(), nullptr));
    r.points.push_back(std::move(p));
  }
  if (!family_set) throw std::runtime_error("report: sweep table has no rows");

  std::vector<double> acc;
  for (const auto& p : r.points) acc.push_back(p.mean_solo_accuracy);
  r.accuracy_spearman = acc.size() >= 2 ? spearman_rho(r.gamma_e_db, acc) : 0.0;
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  r.accuracy_range = *hi - *lo;
  return r;
}

AblationReport read_ablation(const std::string& dir) {
  AblationReport r;
  auto in = open_in(fs::path(dir) / "data.csv");
  std::string line;
  if (!std::getline(in, line) || split_csv(line).size() < 13)
    throw std::runtime_error("report: not an ablation table");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t = split_csv(line);
    AblationRow row;
    row.name = t[0];
    row.m = static_cast<int>(std::strtol(t[1].c_str(), nullptr, 10));
    row.colluding = t[2] == "1";
    row.w = std::strtod(t[3].c_str(), nullptr);
    row.metrics = parse_metric_columns(t, 4);
    r.rows.push_back(std::move(row));
  }

  auto gin = open_in(fs::path(dir) / "gaps.csv");
  if (!std::getline(gin, line) || split_csv(line).size() != 4)
    throw std::runtime_error("report: not a gaps table");
  while (std::getline(gin, line)) {
    if (line.empty()) continue;
    const auto t = split_csv(line);
    AblationGap g;
    g.m = static_cast<int>(std::strtol(t[0].c_str(), nullptr, 10));
    g.colluding = t[1] == "1";
    g.accuracy_gap = std::strtod(t[2].c_str(), nullptr);
    g.ssim_gap = std::strtod(t[3].c_str(), nullptr);
    r.gaps.push_back(g);
  }
  return r;
}

SurfaceResult read_surface(const std::string& dir) {
  auto in = open_in(fs::path(dir) / "data.csv");
  std::string line;
  if (!std::getline(in, line) || split_csv(line)[0] != "alpha")
    throw std::runtime_error("report: not a surface table");

  SurfaceResult r;
  auto note = [](std::vector<double>& grid, double v) {
    if (std::find(grid.begin(), grid.end(), v) == grid.end()) grid.push_back(v);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t = split_csv(line);
    SurfaceCell cell;
    cell.alpha = std::strtod(t[0].c_str(), nullptr);
    cell.w = std::strtod(t[1].c_str(), nullptr);
    cell.metrics = parse_metric_columns(t, 2);
    note(r.alpha_grid, cell.alpha);
    note(r.w_grid, cell.w);
    r.cells.push_back(std::move(cell));
  }
  if (r.cells.empty()) throw std::runtime_error("report: surface table has no rows");
  return r;
}

void emit_surface(const SurfaceResult& r, const std::string& out_dir) {
  const fs::path dir(out_dir);

  auto csv = open_out(dir / "data.csv");
  csv << "alpha,w," << kMetricHeader << '\n';
  for (const auto& cell : r.cells) {
    csv << fmt(cell.alpha) << ',' << fmt(cell.w) << ',';
    metric_columns(csv, cell.metrics);
    csv << '\n';
  }

  const double cell_w = 118, cell_h = 58, left = 86, top = 64;
  const double w = left + cell_w * static_cast<double>(r.w_grid.size()) + 20;
  const double h = top + cell_h * static_cast<double>(r.alpha_grid.size()) + 20;
  auto svg = open_out(dir / "plot.svg");
  svg_open(svg, w, h, "secrecy-utility surface (shade = adversarial accuracy)");
  for (size_t j = 0; j < r.w_grid.size(); ++j)
    svg << "<text x=\"" << left + cell_w * (static_cast<double>(j) + 0.5)
        << "\" y=\"" << top - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">w="
        << fmt3(r.w_grid[j]) << "</text>\n";
  for (size_t i = 0; i < r.alpha_grid.size(); ++i)
    svg << "<text x=\"" << left - 8 << "\" y=\""
        << top + cell_h * (static_cast<double>(i) + 0.55)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">a="
        << fmt3(r.alpha_grid[i]) << "</text>\n";
  for (size_t i = 0; i < r.alpha_grid.size(); ++i) {
    for (size_t j = 0; j < r.w_grid.size(); ++j) {
      const auto& cell = r.cells[i * r.w_grid.size() + j];
      const double acc =
          std::clamp(cell.metrics.mean_solo_accuracy, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255.0 - 170.0 * acc));
      const double x = left + cell_w * static_cast<double>(j);
      const double y = top + cell_h * static_cast<double>(i);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w - 4
          << "\" height=\"" << cell_h - 4 << "\" fill=\"rgb(255," << shade
          << ',' << shade << ")\" stroke=\"#888\"/>\n"
          << "<text x=\"" << x + 8 << "\" y=\"" << y + 22
          << "\" font-family=\"sans-serif\" font-size=\"11\">acc "
          << fmt3(cell.metrics.mean_solo_accuracy) << "</text>\n"
          << "<text x=\"" << x + 8 << "\" y=\"" << y + 40
          << "\" font-family=\"sans-serif\" font-size=\"11\">ssim "
          << fmt3(cell.metrics.mean_ssim) << "</text>\n";
    }
  }
  svg << "</svg>\n";
}

}  // namespace sjscc::eval
