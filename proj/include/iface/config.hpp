#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iface/diagnostics.hpp"
#include "iface/geometry.hpp"

namespace iface {

/// Lower bounds applied to fitted rates and related acceptance checks.
struct AcceptanceBands {
  double theta_slope_min = 1.6;
  double theta_r2_min = 0.95;
  double h1_slope_min = 0.8;
  double ratio_growth_max = 1.25;  // ratio(eps_min) / ratio(eps_max)
  double shift_slope_min = 0.8;
  double far_energy_slope_min = 1.6;
  double far_deviation_slope_min = 2.2;
  double gradient_ratio_tol = 0.10;
  double null_floor = 1e-6;

  bool operator==(const AcceptanceBands&) const = default;
};

enum class RunMode {
  solver,        // evolve the PDE from interface data
  manufactured,  // u := U_eps evaluated directly at every sample point
};

const char* to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct RunConfig {
  /// "collapsing_circle", "perturbed_loop" or "custom" (uses `loop`).
  std::string scenario = "collapsing_circle";
  double perturbation = 0.05;  // amplitude of the perturbed loop
  int loop_modes = 48;         // Fourier modes kept for the perturbed loop
  LoopPair loop = LoopPair::collapsing_circle();

  std::vector<double> epsilons = {0.08, 0.06, 0.045};
  double rho = 0.3;
  double T0 = 0.4;
  double T1_offset = 0.2;    // T1 = T0 + T1_offset
  double chart_margin = 0.05;  // chart y0 range is (-T1 - margin, T1 + margin)
  double t_start = 0.0;
  double h_per_epsilon = 8.0;
  int n_slices = 32;
  int n1 = 256;
  int fiber_per_epsilon = 16;
  double far_field_cadence = 0.5;  // far-field level spacing in units of eps

  double c2 = 0.05;
  double c3 = 0.1;
  double delta = 0.05;
  double alpha0 = 0.05;
  Theta1Variant theta1_variant = Theta1Variant::inverse_eps;
  RunMode mode = RunMode::solver;

  std::string output_dir = "runs/default";
  int snapshot_stride = 0;  // 0 disables snapshots in sweeps
  int workers = 1;

  AcceptanceBands bands;

  double T1() const { return T0 + T1_offset; }
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  /// The loop selected by `scenario`.
  LoopPair resolved_loop() const;

  bool operator==(const RunConfig&) const = default;
};

/// A small closed perturbation of the collapsing-circle data, reparametrized
/// to unit speed.
LoopPair perturbed_loop(double amplitude, int modes);

nlohmann::json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& c, const std::filesystem::path& path);

/// Resolves a relative output directory against $IFACE_OUTPUT_ROOT when set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

}  // namespace iface
