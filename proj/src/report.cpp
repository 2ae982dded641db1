#include "dlms/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dlms {

double to_db(double linear) { return 10.0 * std::log10(linear); }

namespace {

std::string format_db(double linear) {
  const double db = to_db(linear);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", db);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const MetricsSeries& series) {
  std::ofstream out = open_out(path);
  out << "iter,node,msd_w_db,msd_h_db,emse_db,msd_w_theory_db,msd_h_theory_db\n";
  const bool overlay = series.msd_w_theory.size() > 0;
  for (long i = 0; i < series.horizon; ++i) {
    for (int col = 0; col <= series.nodes; ++col) {
      out << i << ',';
      if (col < series.nodes)
        out << (col + 1);
      else
        out << "net";
      out << ',' << format_db(series.msd_w(i, col)) << ',' << format_db(series.msd_h(i, col))
          << ',' << format_db(series.emse(i, col)) << ',';
      if (overlay) out << format_db(series.msd_w_theory(i, col));
      out << ',';
      if (overlay) out << format_db(series.msd_h_theory(i, col));
      out << '\n';
    }
  }
}

NetworkTrajectory read_network_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("trajectory CSV '" + path + "': missing header");
  if (line.rfind("iter,node,msd_w_db,msd_h_db,emse_db", 0) != 0)
    throw std::runtime_error("trajectory CSV '" + path + "': unexpected header '" + line + "'");
  NetworkTrajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 5)
      throw std::runtime_error("trajectory CSV '" + path + "': short row '" + line + "'");
    if (fields[1] != "net") continue;
    traj.msd_w_db.push_back(std::stod(fields[2]));
    traj.msd_h_db.push_back(std::stod(fields[3]));
    traj.emse_db.push_back(std::stod(fields[4]));
  }
  if (traj.msd_w_db.empty())
    throw std::runtime_error("trajectory CSV '" + path + "': no network rows");
  return traj;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void update(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
};

std::string ticks_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& y_label, const std::vector<PlotSeries>& series) {
  const int width = 900, height = 560;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  const int pw = width - ml - mr, ph = height - mt - mb;

  Range xr, yr;
  for (const auto& s : series) {
    xr.update(0);
    xr.update(static_cast<double>(s.values.size() - 1));
    for (double v : s.values) yr.update(v);
  }
  if (!xr.valid() || !yr.valid()) {
    xr = {0, 1};
    yr = {0, 1};
  }
  if (yr.hi == yr.lo) {
    yr.lo -= 1;
    yr.hi += 1;
  }
  const double ypad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= ypad;
  yr.hi += ypad;

  auto xpix = [&](double x) { return ml + pw * (x - xr.lo) / (xr.hi - xr.lo); };
  auto ypix = [&](double y) { return mt + ph * (1.0 - (y - yr.lo) / (yr.hi - yr.lo)); };

  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16' "
      << "font-family='sans-serif'>" << title << "</text>\n";

  // Axes and ticks.
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << pw << "' height='" << ph
      << "' fill='none' stroke='black'/>\n";
  const int nticks = 6;
  for (int t = 0; t <= nticks; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / nticks;
    const double yv = yr.lo + (yr.hi - yr.lo) * t / nticks;
    out << "<line x1='" << xpix(xv) << "' y1='" << mt + ph << "' x2='" << xpix(xv) << "' y2='"
        << mt + ph + 5 << "' stroke='black'/>\n";
    out << "<text x='" << xpix(xv) << "' y='" << mt + ph + 20
        << "' text-anchor='middle' font-size='11' font-family='sans-serif'>"
        << ticks_label(xv) << "</text>\n";
    out << "<line x1='" << ml - 5 << "' y1='" << ypix(yv) << "' x2='" << ml << "' y2='"
        << ypix(yv) << "' stroke='black'/>\n";
    out << "<text x='" << ml - 8 << "' y='" << ypix(yv) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << ticks_label(yv)
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << ypix(yv) << "' x2='" << ml + pw << "' y2='"
        << ypix(yv) << "' stroke='#dddddd' stroke-width='0.5'/>\n";
  }
  out << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>iteration</text>\n";
  out << "<text x='16' y='" << mt + ph / 2
      << "' text-anchor='middle' font-size='13' font-family='sans-serif' transform='rotate(-90 16 "
      << mt + ph / 2 << ")'>" << y_label << "</text>\n";

  for (const auto& s : series) {
    const std::size_t n = s.values.size();
    if (n == 0) continue;
    const std::size_t stride = std::max<std::size_t>(1, n / 2000);
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.4'";
    if (s.dashed) out << " stroke-dasharray='6 4'";
    out << " points='";
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.values[i])) continue;
      out << xpix(static_cast<double>(i)) << ',' << ypix(s.values[i]) << ' ';
    }
    if (std::isfinite(s.values[n - 1]))
      out << xpix(static_cast<double>(n - 1)) << ',' << ypix(s.values[n - 1]);
    out << "'/>\n";
  }

  // Legend.
  double ly = mt + 14;
  for (const auto& s : series) {
    out << "<line x1='" << ml + pw - 180 << "' y1='" << ly << "' x2='" << ml + pw - 150
        << "' y2='" << ly << "' stroke='" << s.color << "' stroke-width='2'";
    if (s.dashed) out << " stroke-dasharray='6 4'";
    out << "/>\n";
    out << "<text x='" << ml + pw - 144 << "' y='" << ly + 4
        << "' font-size='12' font-family='sans-serif'>" << s.label << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
}

namespace {

// Five-stop blue-to-yellow ramp.
void ramp_color(double t, int& r, int& g, int& b) {
  static const int stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const int i = std::min(3, static_cast<int>(pos));
  const double f = pos - i;
  r = static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]));
  g = static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]));
  b = static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]));
}

}  // namespace

void write_heatmap_svg(const std::string& path, const std::string& title,
                       const Eigen::MatrixXd& values) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int cell = std::max(8, 420 / std::max(rows, cols));
  const int ml = 50, mt = 40, legend_w = 70;
  const int width = ml + cols * cell + legend_w + 30;
  const int height = mt + rows * cell + 40;

  Range vr;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) vr.update(values(i, j));
  if (!vr.valid()) vr = {0, 1};
  if (vr.hi == vr.lo) vr.hi = vr.lo + 1;

  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << (ml + cols * cell / 2) << "' y='24' text-anchor='middle' "
      << "font-size='15' font-family='sans-serif'>" << title << "</text>\n";
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double v = values(i, j);
      std::string fill = "#cccccc";
      if (std::isfinite(v)) {
        int r, g, b;
        ramp_color((v - vr.lo) / (vr.hi - vr.lo), r, g, b);
        char buf[10];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        fill = buf;
      }
      // Row index grows upward in the plot.
      out << "<rect x='" << ml + j * cell << "' y='" << mt + (rows - 1 - i) * cell
          << "' width='" << cell << "' height='" << cell << "' fill='" << fill << "'/>\n";
    }
  // Colorbar.
  const int bar_x = ml + cols * cell + 20, bar_h = rows * cell;
  for (int s = 0; s < bar_h; ++s) {
    int r, g, b;
    ramp_color(1.0 - static_cast<double>(s) / bar_h, r, g, b);
    char buf[10];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    out << "<rect x='" << bar_x << "' y='" << mt + s << "' width='16' height='1.5' fill='"
        << buf << "'/>\n";
  }
  out << "<text x='" << bar_x + 22 << "' y='" << mt + 8
      << "' font-size='11' font-family='sans-serif'>" << ticks_label(vr.hi) << "</text>\n";
  out << "<text x='" << bar_x + 22 << "' y='" << mt + bar_h
      << "' font-size='11' font-family='sans-serif'>" << ticks_label(vr.lo) << "</text>\n";
  out << "</svg>\n";
}

void write_grid_csv(const std::string& path, const Eigen::MatrixXd& values) {
  std::ofstream out = open_out(path);
  out << "k1,k2,value\n";
  char buf[40];
  for (int i = 0; i < values.rows(); ++i)
    for (int j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g", values(i, j));
      out << i << ',' << j << ',' << buf << '\n';
    }
}

}  // namespace dlms
