#include "crackfield/report.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "format.hpp"

namespace crackfield {
namespace {

constexpr const char* kModule = "report";

using detail::format_double;

std::string cell(const std::vector<double>& v, std::size_t i) {
  return v.empty() ? std::string() : format_double(v[i]);
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Line {
  std::string name;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Line> lines;
  bool log_x = false;
  std::optional<std::pair<double, double>> band;
  std::optional<double> marker;  // vertical marker at x
};

class Svg {
 public:
  Svg(std::ostream& out, int width, int height, const SvgOptions& options) : out_(out) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (options.timestamp) {
      const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      out_ << "<!-- generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " -->\n";
    }
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
         << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  ~Svg() { out_ << "</svg>\n"; }

  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11,
            double rotate = 0.0) {
    out_ << "<text x=\"" << short_num(x) << "\" y=\"" << short_num(y) << "\" text-anchor=\"" << anchor
         << "\" font-size=\"" << size << '"';
    if (rotate != 0.0) out_ << " transform=\"rotate(" << rotate << ' ' << short_num(x) << ' ' << short_num(y) << ")\"";
    out_ << '>' << escape(s) << "</text>\n";
  }

  void panel(const Panel& p, double ox, double oy, double w, double h) {
    const double left = ox + 60, right = ox + w - 110, top = oy + 24, bottom = oy + h - 36;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& l : p.lines) {
      for (std::size_t i = 0; i < l.x.size(); ++i) {
        const double x = p.log_x ? std::log10(l.x[i]) : l.x[i];
        if (!std::isfinite(x) || !std::isfinite(l.y[i])) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, l.y[i]);
        ymax = std::max(ymax, l.y[i]);
      }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmin -= 1, xmax += 1;
    if (ymax == ymin) ymin -= std::max(1.0, std::abs(ymin) * 0.1), ymax += std::max(1.0, std::abs(ymax) * 0.1);
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto Y = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    text((left + right) / 2, oy + 14, p.title, "middle", 13);
    if (p.band) {
      const double b0 = X(p.band->first), b1 = X(p.band->second);
      out_ << "<rect x=\"" << short_num(b0) << "\" y=\"" << short_num(top) << "\" width=\""
           << short_num(std::max(1.0, b1 - b0)) << "\" height=\"" << short_num(bottom - top)
           << "\" fill=\"#f7b6d2\" fill-opacity=\"0.5\"/>\n";
    }
    out_ << "<rect x=\"" << short_num(left) << "\" y=\"" << short_num(top) << "\" width=\"" << short_num(right - left)
         << "\" height=\"" << short_num(bottom - top) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = ymin + (ymax - ymin) * t / 4.0;
      text(left - 4, Y(yv) + 4, short_num(yv), "end", 10);
      const double xv = xmin + (xmax - xmin) * t / 4.0;
      text(X(xv), bottom + 14, p.log_x ? "1e" + short_num(xv) : short_num(xv), "middle", 10);
    }
    text((left + right) / 2, bottom + 30, p.xlabel);
    text(ox + 14, (top + bottom) / 2, p.ylabel, "middle", 11, -90);
    if (p.marker) {
      const double mx = X(*p.marker);
      out_ << "<line x1=\"" << short_num(mx) << "\" x2=\"" << short_num(mx) << "\" y1=\"" << short_num(top)
           << "\" y2=\"" << short_num(bottom) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    }
    int legend = 0;
    for (const auto& l : p.lines) {
      std::ostringstream pts;
      for (std::size_t i = 0; i < l.x.size(); ++i) {
        const double x = p.log_x ? std::log10(l.x[i]) : l.x[i];
        if (!std::isfinite(x) || !std::isfinite(l.y[i])) continue;
        pts << short_num(X(x)) << ',' << short_num(Y(l.y[i])) << ' ';
      }
      out_ << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.5\" points=\"" << pts.str()
           << "\"/>\n";
      const double ly = top + 12 + 16 * legend++;
      out_ << "<line x1=\"" << short_num(right + 8) << "\" x2=\"" << short_num(right + 26) << "\" y1=\""
           << short_num(ly - 4) << "\" y2=\"" << short_num(ly - 4) << "\" stroke=\"" << l.color
           << "\" stroke-width=\"2\"/>\n";
      text(right + 30, ly, l.name, "start", 10);
    }
  }

  void heatmap(const std::string& title, const std::vector<int>& xs, const std::vector<int>& ys,
               const std::vector<double>& values, double ox, double oy, double w, double h) {
    const double left = ox + 40, top = oy + 24, size = std::min(w - 60, h - 60);
    const double cw = size / static_cast<double>(xs.size()), ch = size / static_cast<double>(ys.size());
    double vmax = 0.0;
    for (double v : values)
      if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
    text(left + size / 2, oy + 14, title + " (max " + short_num(vmax) + ")", "middle", 12);
    for (std::size_t j = 0; j < ys.size(); ++j) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = values[j * xs.size() + i];
        const double t = (std::isfinite(v) && vmax > 0.0) ? std::abs(v) / vmax : 0.0;
        const double y = top + (static_cast<double>(ys.size() - 1 - j)) * ch;
        out_ << "<rect x=\"" << short_num(left + i * cw) << "\" y=\"" << short_num(y) << "\" width=\""
             << short_num(cw) << "\" height=\"" << short_num(ch) << "\" fill=\""
             << (std::isfinite(v) ? colour(t) : std::string("#cccccc")) << "\"/>\n";
      }
    }
    for (std::size_t i = 0; i < xs.size(); ++i) text(left + (i + 0.5) * cw, top + size + 12, std::to_string(xs[i]), "middle", 9);
    for (std::size_t j = 0; j < ys.size(); ++j)
      text(left - 4, top + (ys.size() - 1 - j + 0.5) * ch + 3, std::to_string(ys[j]), "end", 9);
    text(left + size / 2, top + size + 26, "dx (nodes)", "middle", 10);
  }

 private:
  static std::string colour(double t) {
    // Viridis, five stops.
    static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                              {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                  static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                  static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
    return buf;
  }

  std::ostream& out_;
};

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
  return out;
}

std::vector<double> to_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

void write_results_csv(const ContourSeries& s, std::ostream& out) {
  out << "contour,radius_m,J,K_I,K_II,K_II_pseudo,K_III,J_III,J_total\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << s.ring[i] << ',' << format_double(s.outer_radius[i]) << ',' << format_double(s.J[i]) << ','
        << cell(s.K_I, i) << ',' << cell(s.K_II, i) << ',' << cell(s.K_II_pseudo, i) << ',' << cell(s.K_III, i)
        << ',' << cell(s.J_III, i) << ',' << cell(s.J_total, i) << '\n';
  }
}

void write_study_csv(const StudyResult& study, std::ostream& out) {
  const bool offsets = study.kind == StudyKind::tip_offset;
  out << (offsets ? "dx,dy" : study.kind == StudyKind::q_sweep ? "angle_rad" : "fraction")
      << ",quantity,mean,plateau_std,spread,error,error_rms,error_envelope,realisations,no_plateau\n";
  auto val = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& p : study.points) {
    for (int q = 0; q < QuantityValues::size; ++q) {
      if (!std::isfinite(p.mean[q])) continue;
      if (offsets) {
        out << p.dx << ',' << p.dy;
      } else {
        out << format_double(p.axis);
      }
      out << ',' << kQuantityNames[q] << ',' << val(p.mean[q]) << ',' << val(p.plateau_std[q]) << ','
          << val(p.spread[q]) << ',' << val(p.error[q]) << ',' << val(p.error_rms[q]) << ','
          << val(p.error_envelope[q]) << ',' << p.realisations << ',' << (p.no_plateau ? 1 : 0) << '\n';
    }
  }
}

void write_series_svg(const AnalysisResult& r, std::ostream& out, const SvgOptions& options) {
  const ContourSeries& s = r.series;
  const auto x = to_double(s.ring);
  std::optional<std::pair<double, double>> band;
  if (!r.plateau.no_plateau && s.size() > 0) {
    band = std::make_pair(x[static_cast<std::size_t>(r.plateau.start)] - 0.5,
                          x[static_cast<std::size_t>(r.plateau.end)] + 0.5);
  }
  Panel jp{"J-integral", "contour", "J (J/m^2)", {{"J (in-plane)", "#1f77b4", x, s.J}}, false, band, std::nullopt};
  if (s.has_mode3()) {
    jp.lines.push_back({"J_III", "#9467bd", x, s.J_III});
    jp.lines.push_back({"J_total", "#d62728", x, s.J_total});
  }
  Svg svg(out, 760, s.has_k() ? 620 : 320, options);
  svg.panel(jp, 0, 0, 760, 300);
  if (s.has_k()) {
    Panel kp{"Stress intensity factors", "contour", "K (MPa m^0.5)", {}, false, band, std::nullopt};
    kp.lines.push_back({"K_I", "#1f77b4", x, scaled(s.K_I, 1e-6)});
    kp.lines.push_back({"K_II", "#ff7f0e", x, scaled(s.K_II, 1e-6)});
    if (s.has_mode3()) kp.lines.push_back({"K_III", "#2ca02c", x, scaled(s.K_III, 1e-6)});
    svg.panel(kp, 0, 310, 760, 300);
  }
}

void write_study_svg(const StudyResult& study, std::ostream& out, const SvgOptions& options) {
  const auto& pts = study.points;
  auto column = [&](auto pick) {
    std::vector<double> v;
    for (const auto& p : pts) v.push_back(pick(p));
    return v;
  };
  if (study.kind == StudyKind::tip_offset) {
    std::vector<int> xs, ys;
    for (const auto& p : pts) {
      if (std::find(xs.begin(), xs.end(), p.dx) == xs.end()) xs.push_back(p.dx);
      if (std::find(ys.begin(), ys.end(), p.dy) == ys.end()) ys.push_back(p.dy);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    Svg svg(out, 880, 260, options);
    for (int q = 0; q < QuantityValues::size; ++q) {
      std::vector<double> grid(xs.size() * ys.size(), std::numeric_limits<double>::quiet_NaN());
      for (const auto& p : pts) {
        const auto i = static_cast<std::size_t>(std::find(xs.begin(), xs.end(), p.dx) - xs.begin());
        const auto j = static_cast<std::size_t>(std::find(ys.begin(), ys.end(), p.dy) - ys.begin());
        grid[j * xs.size() + i] = p.error[q];
      }
      svg.heatmap(std::string("|error| ") + kQuantityNames[q], xs, ys, grid, 220.0 * q, 0, 220, 260);
    }
    return;
  }
  const auto axis = column([&](const StudyPoint& p) {
    return study.kind == StudyKind::q_sweep ? p.axis * 180.0 / std::numbers::pi : p.axis;
  });
  Svg svg(out, 760, 620, options);
  if (study.kind == StudyKind::q_sweep) {
    std::optional<double> marker;
    if (pts.size() >= 3) marker = suggest_q_direction(study).angle * 180.0 / std::numbers::pi;
    Panel jp{"J versus q direction", "q angle (deg)", "J (J/m^2)",
             {{"J", "#1f77b4", axis, column([](const StudyPoint& p) { return p.mean.J; })}}, false, std::nullopt, marker};
    svg.panel(jp, 0, 0, 760, 300);
    Panel kp{"K versus q direction", "q angle (deg)", "K (MPa m^0.5)", {}, false, std::nullopt, marker};
    kp.lines.push_back({"K_I", "#1f77b4", axis, column([](const StudyPoint& p) { return p.mean.K_I * 1e-6; })});
    kp.lines.push_back({"K_II", "#ff7f0e", axis, column([](const StudyPoint& p) { return p.mean.K_II * 1e-6; })});
    kp.lines.push_back({"K_III", "#2ca02c", axis, column([](const StudyPoint& p) { return p.mean.K_III * 1e-6; })});
    svg.panel(kp, 0, 310, 760, 300);
    return;
  }
  static const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"};
  Panel ep{"Normalised error envelope", "noise fraction", "|error|", {}, true, std::nullopt, std::nullopt};
  Panel sp{"Plateau std", "noise fraction", "std / |truth|", {}, true, std::nullopt, std::nullopt};
  for (int q = 0; q < QuantityValues::size; ++q) {
    const double truth = study.truth ? std::abs((*study.truth)[q]) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(truth)) continue;
    ep.lines.push_back({kQuantityNames[q], colours[q], axis, column([&](const StudyPoint& p) { return p.error_envelope[q]; })});
    sp.lines.push_back({kQuantityNames[q], colours[q], axis, column([&](const StudyPoint& p) { return p.plateau_std[q] / truth; })});
  }
  svg.panel(ep, 0, 0, 760, 300);
  svg.panel(sp, 0, 310, 760, 300);
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::IoError, kModule, "cannot create output directory " + dir.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, kModule, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, kModule, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, kModule, "cannot move " + tmp.string() + " into place");
  }
}

ReportFiles emit_report(const AnalysisResult& result, const Json& summary, const std::filesystem::path& outdir,
                        const SvgOptions& options) {
  ensure_directory(outdir);
  ReportFiles files{outdir / "results.csv", outdir / "summary.json", outdir / "contours.svg"};
  std::ostringstream csv, svg;
  write_results_csv(result.series, csv);
  write_series_svg(result, svg, options);
  write_file_atomic(files.results_csv, csv.str());
  write_file_atomic(files.summary_json, summary.dump(2) + "\n");
  write_file_atomic(files.plot_svg, svg.str());
  return files;
}

}  // namespace crackfield
