#include "iface/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "iface/errors.hpp"

namespace iface {

using nlohmann::json;

const char* to_string(RunMode m) {
  return m == RunMode::solver ? "solver" : "manufactured";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "solver") {
    return RunMode::solver;
  }
  if (s == "manufactured") {
    return RunMode::manufactured;
  }
  throw ConfigError("unknown run mode '" + s + "' (expected solver or manufactured)");
}

namespace {

Theta1Variant variant_from_string(const std::string& s) {
  if (s == to_string(Theta1Variant::inverse_eps)) {
    return Theta1Variant::inverse_eps;
  }
  if (s == to_string(Theta1Variant::inverse_eps_squared)) {
    return Theta1Variant::inverse_eps_squared;
  }
  throw ConfigError("unknown theta1 variant '" + s + "'");
}

json coeffs_to_json(const std::vector<Vec2>& c) {
  json a = json::array();
  for (const Vec2& v : c) {
    a.push_back({v.x(), v.y()});
  }
  return a;
}

std::vector<Vec2> coeffs_from_json(const json& j) {
  std::vector<Vec2> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) {
      throw ConfigError("Fourier coefficients must be [x, y] pairs");
    }
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

json curve_to_json(const FourierCurve& c) {
  return {{"cos", coeffs_to_json(c.cos_coeffs)}, {"sin", coeffs_to_json(c.sin_coeffs)}};
}

FourierCurve curve_from_json(const json& j) {
  FourierCurve c;
  c.cos_coeffs = coeffs_from_json(j.at("cos"));
  c.sin_coeffs = coeffs_from_json(j.at("sin"));
  if (c.cos_coeffs.size() != c.sin_coeffs.size() || c.cos_coeffs.empty()) {
    throw ConfigError("a Fourier curve needs equally many (>= 1) cos and sin coefficients");
  }
  return c;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (scenario != "collapsing_circle" && scenario != "perturbed_loop" && scenario != "custom") {
    fail("unknown scenario '" + scenario + "'");
  }
  if (epsilons.size() < 3) {
    fail("the epsilon list needs at least 3 entries for rate fits");
  }
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] <= 1.0)) {
      fail("every epsilon must lie in (0, 1]");
    }
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      fail("the epsilon list must be strictly decreasing");
    }
  }
  for (double x : {rho, T0, T1_offset, chart_margin, h_per_epsilon, far_field_cadence, c2, c3,
                   delta, alpha0}) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      fail("rho, T0, offsets, grid rules and thresholds must be positive");
    }
  }
  if (n_slices < 3) {
    fail("at least 3 slices are needed for y0 derivatives");
  }
  if (n1 < 8) {
    fail("n1 must be at least 8");
  }
  if (fiber_per_epsilon < 4) {
    fail("fiber_per_epsilon must be at least 4");
  }
  if (snapshot_stride < 0 || workers < 1) {
    fail("snapshot_stride must be >= 0 and workers >= 1");
  }
  if (scenario == "perturbed_loop" && (perturbation < 0.0 || perturbation > 0.2 || loop_modes < 4)) {
    fail("perturbed_loop needs 0 <= perturbation <= 0.2 and loop_modes >= 4");
  }
  if (output_dir.empty()) {
    fail("output_dir must not be empty");
  }
}

LoopPair perturbed_loop(double amplitude, int modes) {
  const double a = amplitude;
  auto ca = [a](double s) {
    return Vec2(std::cos(s) + a * std::cos(2.0 * s), std::sin(s) + a * std::sin(3.0 * s));
  };
  auto cb = [a](double s) {
    return Vec2(std::cos(s) - a * std::sin(2.0 * s), -std::sin(s) + 0.5 * a * std::cos(3.0 * s));
  };
  LoopPair p;
  p.a = unit_speed_fourier(ca, modes);
  p.b = unit_speed_fourier(cb, modes);
  return p;
}

LoopPair RunConfig::resolved_loop() const {
  if (scenario == "collapsing_circle") {
    return LoopPair::collapsing_circle();
  }
  if (scenario == "perturbed_loop") {
    return perturbed_loop(perturbation, loop_modes);
  }
  return loop;
}

json to_json(const RunConfig& c) {
  json b = {{"theta_slope_min", c.bands.theta_slope_min},
            {"theta_r2_min", c.bands.theta_r2_min},
            {"h1_slope_min", c.bands.h1_slope_min},
            {"ratio_growth_max", c.bands.ratio_growth_max},
            {"shift_slope_min", c.bands.shift_slope_min},
            {"far_energy_slope_min", c.bands.far_energy_slope_min},
            {"far_deviation_slope_min", c.bands.far_deviation_slope_min},
            {"gradient_ratio_tol", c.bands.gradient_ratio_tol},
            {"null_floor", c.bands.null_floor}};
  return {{"scenario", c.scenario},
          {"perturbation", c.perturbation},
          {"loop_modes", c.loop_modes},
          {"loop", {{"a", curve_to_json(c.loop.a)}, {"b", curve_to_json(c.loop.b)}}},
          {"epsilons", c.epsilons},
          {"rho", c.rho},
          {"T0", c.T0},
          {"T1_offset", c.T1_offset},
          {"chart_margin", c.chart_margin},
          {"t_start", c.t_start},
          {"h_per_epsilon", c.h_per_epsilon},
          {"n_slices", c.n_slices},
          {"n1", c.n1},
          {"fiber_per_epsilon", c.fiber_per_epsilon},
          {"far_field_cadence", c.far_field_cadence},
          {"c2", c.c2},
          {"c3", c.c3},
          {"delta", c.delta},
          {"alpha0", c.alpha0},
          {"theta1_variant", to_string(c.theta1_variant)},
          {"mode", to_string(c.mode)},
          {"output_dir", c.output_dir},
          {"snapshot_stride", c.snapshot_stride},
          {"workers", c.workers},
          {"bands", b}};
}

RunConfig config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "scenario", "perturbation", "loop_modes", "loop", "epsilons", "rho", "T0", "T1_offset",
      "chart_margin", "t_start", "h_per_epsilon", "n_slices", "n1", "fiber_per_epsilon",
      "far_field_cadence", "c2", "c3", "delta", "alpha0", "theta1_variant", "mode", "output_dir",
      "snapshot_stride", "workers", "bands"};
  if (!j.is_object()) {
    throw ConfigError("configuration must be a JSON object");
  }
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) {
      throw ConfigError("unknown configuration key '" + k + "'");
    }
  }
  RunConfig c;
  try {
    read(j, "scenario", c.scenario);
    read(j, "perturbation", c.perturbation);
    read(j, "loop_modes", c.loop_modes);
    if (j.contains("loop")) {
      c.loop.a = curve_from_json(j.at("loop").at("a"));
      c.loop.b = curve_from_json(j.at("loop").at("b"));
    }
    read(j, "epsilons", c.epsilons);
    read(j, "rho", c.rho);
    read(j, "T0", c.T0);
    read(j, "T1_offset", c.T1_offset);
    read(j, "chart_margin", c.chart_margin);
    read(j, "t_start", c.t_start);
    read(j, "h_per_epsilon", c.h_per_epsilon);
    read(j, "n_slices", c.n_slices);
    read(j, "n1", c.n1);
    read(j, "fiber_per_epsilon", c.fiber_per_epsilon);
    read(j, "far_field_cadence", c.far_field_cadence);
    read(j, "c2", c.c2);
    read(j, "c3", c.c3);
    read(j, "delta", c.delta);
    read(j, "alpha0", c.alpha0);
    if (j.contains("theta1_variant")) {
      c.theta1_variant = variant_from_string(j.at("theta1_variant").get<std::string>());
    }
    if (j.contains("mode")) {
      c.mode = run_mode_from_string(j.at("mode").get<std::string>());
    }
    read(j, "output_dir", c.output_dir);
    read(j, "snapshot_stride", c.snapshot_stride);
    read(j, "workers", c.workers);
    if (j.contains("bands")) {
      const json& b = j.at("bands");
      read(b, "theta_slope_min", c.bands.theta_slope_min);
      read(b, "theta_r2_min", c.bands.theta_r2_min);
      read(b, "h1_slope_min", c.bands.h1_slope_min);
      read(b, "ratio_growth_max", c.bands.ratio_growth_max);
      read(b, "shift_slope_min", c.bands.shift_slope_min);
      read(b, "far_energy_slope_min", c.bands.far_energy_slope_min);
      read(b, "far_deviation_slope_min", c.bands.far_deviation_slope_min);
      read(b, "gradient_ratio_tol", c.bands.gradient_ratio_tol);
      read(b, "null_floor", c.bands.null_floor);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open configuration " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write configuration " + path.string());
  }
  out << to_json(c).dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing configuration " + path.string());
  }
}

std::filesystem::path resolve_output(const std::filesystem::path& p) {
  if (p.is_absolute()) {
    return p;
  }
  if (const char* root = std::getenv("IFACE_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

}  // namespace iface
