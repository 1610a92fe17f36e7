#include "iface/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iface/errors.hpp"

namespace iface {

using nlohmann::json;

namespace {

std::string num(double x, const char* fmt = "%.10e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

std::vector<std::pair<double, double>> metric_points(const SweepReport& rep,
                                                     const std::string& m) {
  std::vector<std::pair<double, double>> pts;
  for (const EpsilonRun& r : rep.runs) {
    if (r.ok) {
      pts.emplace_back(r.epsilon, metric_value(r, m));
    }
  }
  return pts;
}

}  // namespace

PlotAxes plot_axes(const std::vector<std::pair<double, double>>& points) {
  double xl = INFINITY, xh = -INFINITY, yl = INFINITY, yh = -INFINITY;
  for (const auto& [x, y] : points) {
    if (x > 0.0 && y > 0.0) {
      xl = std::min(xl, std::log10(x));
      xh = std::max(xh, std::log10(x));
      yl = std::min(yl, std::log10(y));
      yh = std::max(yh, std::log10(y));
    }
  }
  PlotAxes a;
  if (!std::isfinite(xl)) {
    return a;
  }
  auto widen = [](double lo, double hi, double& out_lo, double& out_hi) {
    const double span = hi - lo;
    if (span <= 0.0) {
      out_lo = lo - 0.5;
      out_hi = hi + 0.5;
    } else {
      out_lo = lo - 0.1 * span;
      out_hi = hi + 0.1 * span;
    }
  };
  widen(xl, xh, a.x_lo, a.x_hi);
  widen(yl, yh, a.y_lo, a.y_hi);
  return a;
}

std::string render_svg(const std::string& title, const std::vector<std::pair<double, double>>& points,
                       const FitOutcome* fit) {
  const double W = 640, H = 480, left = 80, right = 20, top = 40, bottom = 60;
  const PlotAxes a = plot_axes(points);
  auto px = [&](double lx) { return left + (lx - a.x_lo) / (a.x_hi - a.x_lo) * (W - left - right); };
  auto py = [&](double ly) { return H - bottom - (ly - a.y_lo) / (a.y_hi - a.y_lo) * (H - top - bottom); };
  const char* f = "%.2f";
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\">\n";
  s << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << title << "</text>\n";
  s << "<rect x=\"" << num(left, f) << "\" y=\"" << num(top, f) << "\" width=\""
    << num(W - left - right, f) << "\" height=\"" << num(H - top - bottom, f)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double lx = a.x_lo + i * (a.x_hi - a.x_lo) / 4.0;
    const double ly = a.y_lo + i * (a.y_hi - a.y_lo) / 4.0;
    s << "<text x=\"" << num(px(lx), f) << "\" y=\"" << num(H - bottom + 18, f)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(std::pow(10.0, lx), "%.3g") << "</text>\n";
    s << "<text x=\"" << num(left - 6, f) << "\" y=\"" << num(py(ly) + 4, f)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << num(std::pow(10.0, ly), "%.3g") << "</text>\n";
  }
  s << "<text x=\"320\" y=\"" << num(H - 16, f)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">epsilon</text>\n";
  if (fit != nullptr && fit->ok) {
    const double y0 = (fit->fit.intercept + fit->fit.slope * a.x_lo * std::log(10.0)) / std::log(10.0);
    const double y1 = (fit->fit.intercept + fit->fit.slope * a.x_hi * std::log(10.0)) / std::log(10.0);
    s << "<line x1=\"" << num(px(a.x_lo), f) << "\" y1=\"" << num(py(y0), f) << "\" x2=\""
      << num(px(a.x_hi), f) << "\" y2=\"" << num(py(y1), f)
      << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
    s << "<text x=\"" << num(left + 8, f) << "\" y=\"" << num(top + 16, f)
      << "\" font-family=\"sans-serif\" font-size=\"12\">slope " << num(fit->fit.slope, "%.3f")
      << ", R2 " << num(fit->fit.r2, "%.4f") << "</text>\n";
  }
  for (const auto& [x, y] : points) {
    if (x > 0.0 && y > 0.0) {
      s << "<circle cx=\"" << num(px(std::log10(x)), f) << "\" cy=\""
        << num(py(std::log10(y)), f) << "\" r=\"4\" fill=\"crimson\"/>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

json sweep_summary(const SweepReport& rep) {
  json runs = json::array();
  for (const EpsilonRun& r : rep.runs) {
    runs.push_back(run_to_json(r));
  }
  json fits = json::object();
  for (const auto& [name, o] : rep.fits) {
    if (o.ok) {
      fits[name] = {{"slope", o.fit.slope},
                    {"intercept", o.fit.intercept},
                    {"r2", o.fit.r2},
                    {"points", o.fit.points}};
    } else {
      fits[name] = {{"error", o.error}};
    }
  }
  return {{"config", to_json(rep.config)}, {"runs", runs}, {"fits", fits}};
}

std::vector<std::filesystem::path> emit_report(const SweepReport& rep,
                                               const std::filesystem::path& dir) {
  if (rep.runs.empty()) {
    throw Error("cannot report an empty sweep");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir / "plots", ec);
  if (ec) {
    throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  }
  std::vector<std::filesystem::path> written;

  std::ostringstream csv;
  csv << "epsilon,ok";
  for (const std::string& m : sweep_metrics()) {
    csv << ',' << m;
  }
  csv << ",energy_drift,max_residual_normalized,error_kind\n";
  for (const EpsilonRun& r : rep.runs) {
    csv << num(r.epsilon) << ',' << (r.ok ? 1 : 0);
    for (const std::string& m : sweep_metrics()) {
      csv << ',' << num(metric_value(r, m));
    }
    csv << ',' << num(r.energy_drift) << ',' << num(r.max_residual_normalized) << ','
        << r.error_kind << '\n';
  }
  written.push_back(dir / "sweep.csv");
  write_text(written.back(), csv.str());

  written.push_back(dir / "summary.json");
  write_text(written.back(), sweep_summary(rep).dump(2) + "\n");

  for (const std::string& m : sweep_metrics()) {
    const auto it = rep.fits.find(m);
    const FitOutcome* fit = it == rep.fits.end() ? nullptr : &it->second;
    written.push_back(dir / "plots" / (m + ".svg"));
    write_text(written.back(), render_svg(m, metric_points(rep, m), fit));
  }
  return written;
}

SweepReport load_sweep(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.is_directory() && e.path().filename().string().rfind("eps_", 0) == 0 &&
        std::filesystem::exists(e.path() / "run.json")) {
      files.push_back(e.path() / "run.json");
    }
  }
  if (ec) {
    throw IoError("cannot list run directory " + dir.string() + ": " + ec.message());
  }
  SweepReport rep;
  bool have_config = false;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError(f.string() + ": " + e.what());
    }
    rep.runs.push_back(run_from_json(j));
    if (!have_config && j.contains("config")) {
      rep.config = config_from_json(j.at("config"));
      have_config = true;
    }
  }
  std::sort(rep.runs.begin(), rep.runs.end(),
            [](const EpsilonRun& a, const EpsilonRun& b) { return a.epsilon > b.epsilon; });
  rep.fits = fit_all(rep.runs);
  return rep;
}

}  // namespace iface
