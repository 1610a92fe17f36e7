// Command-line front end: chart export, single runs, snapshot analysis,
// epsilon sweeps, the ODE lab experiments and report regeneration.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <boost/core/demangle.hpp>
#include <nlohmann/json.hpp>

#include "iface/config.hpp"
#include "iface/errors.hpp"
#include "iface/harness.hpp"
#include "iface/log.hpp"
#include "iface/odelab.hpp"
#include "iface/profile.hpp"
#include "iface/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iface;

namespace {

json ode_kernel() {
  const OdeLine line;
  const std::vector<double> z = line.points();
  std::vector<double> w0(z.size(), 0.0), h(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    h[i] = 1.0 / (std::cosh(z[i]) * std::cosh(z[i]));
  }
  const std::vector<double> w1 = apply_S(w0, h, line);
  double err = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    err = std::max(err, std::abs(w1[i] - z[i] * h[i]));
  }
  const SobolevCheck sob = sobolev_check(w1, line);
  return {{"case", "kernel"},
          {"h_norm", line_l2(h, line)},
          {"w_h1", line_h1(w1, line)},
          {"iterations", 1},
          {"factors", json::array()},
          {"residual", linearized_residual(w1, w0, h, line)},
          {"max_error_vs_closed_form", err},
          {"sobolev_holds", sob.holds}};
}

json ode_fixedpoint(double alpha0) {
  const OdeLine line;
  const std::vector<double> z = line.points();
  json out = json::array();
  const double unit = std::sqrt(4.0 / 3.0);  // ||sech^2||_L2
  for (double target : {1e-3, 1e-2, 5e-2}) {
    std::vector<double> h(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      h[i] = target / unit / (std::cosh(z[i]) * std::cosh(z[i]));
    }
    const FixedPointReport r = fixed_point(h, line, 1e-13, 100, alpha0);
    json j = to_json(r);
    j["ratio_w_h1_over_h_norm"] = r.w_h1 / r.h_norm;
    out.push_back(j);
  }
  return {{"case", "fixedpoint"}, {"experiments", out}};
}

json ode_coercivity(double epsilon) {
  const double rho = 0.3;
  const FiberGrid g = FiberGrid::for_epsilon(rho, epsilon, 64);
  json out = json::array();
  auto add = [&](const std::string& name, const std::vector<double>& v) {
    json j = to_json(coercivity_check(v, g, epsilon));
    j["profile"] = name;
    out.push_back(j);
  };
  add("q_eps", sample_fiber(g, [&](double z) { return q_eps(z, epsilon); }));
  add("q_eps_plus_oscillation", sample_fiber(g, [&](double z) {
        return q_eps(z, epsilon) + std::pow(epsilon, 1.5) * std::sin(z / epsilon) * chi(z, rho);
      }));
  add("narrow_step", sample_fiber(g, [&](double z) { return std::tanh(4.0 * z / epsilon); }));
  return {{"case", "coercivity"}, {"epsilon", epsilon}, {"experiments", out}};
}

void write_json(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const fs::path p = resolve_output(out);
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream f(p);
  if (!f) {
    throw IoError("cannot write " + p.string());
  }
  f << j.dump(2) << '\n';
  std::cout << p.string() << '\n';
}

std::string eps_dir(double eps) { return run_dir_name(eps); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interface dynamics lab: wave solver, normal-coordinate diagnostics and sweeps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_dir;
  std::string out_path;
  double epsilon = 0.05;
  int snapshot_stride = -1;
  std::string ode_case = "kernel";
  double ode_eps = 0.05;
  double alpha0 = 0.05;
  int chart_n0 = 45;
  int chart_n1 = 256;

  auto* surface = app.add_subcommand("surface", "validate the loop data and export the chart table");
  surface->add_option("--config", config_path, "run configuration (JSON)")->required();
  surface->add_option("--n0", chart_n0, "y0 samples in the exported table");
  surface->add_option("--n1", chart_n1, "y1 samples in the exported table");

  auto* simulate = app.add_subcommand("simulate", "evolve one epsilon and write its diagnostics");
  simulate->add_option("--config", config_path, "run configuration (JSON)")->required();
  simulate->add_option("--epsilon", epsilon, "interface width")->required();
  simulate->add_option("--snapshot-stride", snapshot_stride,
                       "levels between snapshots (default: about eps/4 in time; 0 disables)");

  auto* analyze = app.add_subcommand("analyze", "recompute diagnostics from a run's snapshots");
  analyze->add_option("--run-dir", run_dir, "directory written by simulate")->required();

  auto* sweep = app.add_subcommand("sweep", "run every configured epsilon and fit the rates");
  sweep->add_option("--config", config_path, "run configuration (JSON)")->required();

  auto* ode = app.add_subcommand("ode-lab", "one-dimensional solution-operator experiments");
  ode->add_option("--case", ode_case, "experiment")
      ->check(CLI::IsMember({"kernel", "fixedpoint", "coercivity"}));
  ode->add_option("--epsilon", ode_eps, "interface width for the coercivity case");
  ode->add_option("--alpha0", alpha0, "largest admissible ||h||_L2");
  ode->add_option("--out", out_path, "write the JSON report here instead of stdout");

  auto* report = app.add_subcommand("report", "rebuild tables and plots of a sweep directory");
  report->add_option("--run-dir", run_dir, "sweep output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (surface->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const LoopPair loop = cfg.resolved_loop();
      const ValidationReport v = validate_loop(loop, 1e-6);
      const SurfaceChart chart = make_chart(cfg);
      const fs::path dir = resolve_output(cfg.output_dir);
      fs::create_directories(dir);
      chart.export_csv(dir / "chart.csv", chart_n0, chart_n1);
      const json j = {{"max_deviation_a", v.max_deviation_a},
                      {"max_deviation_b", v.max_deviation_b},
                      {"tol", v.tol},
                      {"passed", v.passed},
                      {"rho", chart.rho()},
                      {"min_abs_det", chart.min_abs_det()},
                      {"orientation", chart.surface().orientation()}};
      write_json(j, (dir / "surface.json").string());
      return v.passed ? 0 : 2;
    }
    if (simulate->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const fs::path dir = resolve_output(cfg.output_dir) / eps_dir(epsilon);
      if (snapshot_stride < 0) {
        const GridSpec g = GridSpec::for_interface(epsilon, 0.0, 0.0, 0.0, 0.0, cfg.h_per_epsilon);
        snapshot_stride = far_field_stride(epsilon, g.dt, 0.25);
      }
      const EpsilonRun r = run_epsilon(cfg, epsilon, &dir, snapshot_stride);
      std::cout << run_to_json(r).dump(2) << '\n' << dir.string() << '\n';
      return 0;
    }
    if (analyze->parsed()) {
      const fs::path dir = resolve_output(run_dir);
      std::ifstream in(dir / "run.json");
      if (!in) {
        throw IoError("no run.json in " + dir.string());
      }
      json j;
      in >> j;
      const RunConfig cfg = config_from_json(j.at("config"));
      const double eps = j.at("epsilon").get<double>();
      const EpsilonRun r = analyze_snapshots(cfg, eps, dir / "snapshots");
      write_run_outputs(cfg, r, dir / "analysis");
      std::cout << run_to_json(r).dump(2) << '\n';
      return 0;
    }
    if (sweep->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const fs::path dir = resolve_output(cfg.output_dir);
      const SweepReport rep = run_sweep(cfg, &dir);
      for (const fs::path& p : emit_report(rep, dir)) {
        std::cout << p.string() << '\n';
      }
      for (const EpsilonRun& r : rep.runs) {
        if (!r.ok) {
          return 2;
        }
      }
      return 0;
    }
    if (ode->parsed()) {
      json j;
      if (ode_case == "kernel") {
        j = ode_kernel();
      } else if (ode_case == "fixedpoint") {
        j = ode_fixedpoint(alpha0);
      } else {
        j = ode_coercivity(ode_eps);
      }
      write_json(j, out_path);
      return 0;
    }
    if (report->parsed()) {
      const fs::path dir = resolve_output(run_dir);
      const SweepReport rep = load_sweep(dir);
      for (const fs::path& p : emit_report(rep, dir)) {
        std::cout << p.string() << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error (" << boost::core::demangle(typeid(e).name()) << "): " << e.what() << '\n';
    return 1;
  }
  return 0;
}
