#include "iface/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <future>
#include <numbers>
#include <sstream>

#include <boost/core/demangle.hpp>

#include "iface/errors.hpp"
#include "iface/field.hpp"
#include "iface/log.hpp"

namespace iface {

using nlohmann::json;

namespace {

std::string format_eps(double eps) {
  std::ostringstream os;
  os << eps;
  return os.str();
}

std::string kind_of(const std::exception& e) {
  std::string k = boost::core::demangle(typeid(e).name());
  const std::string ns = "iface::";
  if (k.rfind(ns, 0) == 0) {
    k = k.substr(ns.size());
  }
  return k;
}

// Projection of every fiber onto the translates of Q_eps. The first failing
// fiber aborts the run with its original error type.
ShiftField decompose(const RunConfig& cfg, const ProfileParams& params,
                     const std::vector<PullbackSlice>& slices,
                     std::vector<SliceDiagnostics>& diag, EpsilonRun& r) {
  const int ns = static_cast<int>(slices.size());
  const int n1 = slices.front().n1;
  std::vector<double> y0(ns);
  for (int s = 0; s < ns; ++s) {
    y0[s] = slices[s].y0;
  }
  ShiftField shift(y0, n1);
  DecompositionOptions opt{cfg.c3, cfg.delta};
  std::vector<DecompositionResult> res(static_cast<std::size_t>(ns) * n1);
  std::exception_ptr first_error;
  std::string where;
#pragma omp parallel for schedule(dynamic, 16)
  for (int p = 0; p < ns * n1; ++p) {
    const int s = p / n1;
    const int k = p % n1;
    try {
      res[p] = optimal_shift(slices[s].fiber_values(k), slices[s].fiber, params, opt);
    } catch (...) {
#pragma omp critical
      {
        if (!first_error) {
          first_error = std::current_exception();
          std::ostringstream os;
          os << "slice y0 = " << slices[s].y0 << ", angle index " << k;
          where = os.str();
        }
      }
    }
  }
  if (first_error) {
    log_warning("decomposition failed at " + where);
    std::rethrow_exception(first_error);
  }
  for (int s = 0; s < ns; ++s) {
    diag[s].s_star.resize(n1);
    diag[s].residual.resize(n1);
    for (int k = 0; k < n1; ++k) {
      const DecompositionResult& d = res[static_cast<std::size_t>(s) * n1 + k];
      shift(s, k) = d.s_star;
      diag[s].s_star[k] = d.s_star;
      diag[s].residual[k] = d.residual_orthogonality;
      r.max_residual_normalized = std::max(r.max_residual_normalized, d.residual_normalized);
      r.sup_shift_abs = std::max(r.sup_shift_abs, std::abs(d.s_star));
      if (!d.unique) {
        ++r.uncertified_fibers;
      }
    }
  }
  return shift;
}

// Shared back half of every run: Thetas, decomposition, comparison function
// and the assembled norms.
void assemble(const RunConfig& cfg, const SurfaceChart& chart, const ProfileParams& params,
              const std::vector<PullbackSlice>& slices, const FarFieldTotals& far,
              double dy0, EpsilonRun& r) {
  const double eps = params.epsilon;
  r.slices.clear();
  for (const PullbackSlice& s : slices) {
    r.slices.push_back(theta_slice(s, eps, cfg.theta1_variant));
  }
  r.sup_Theta1 = r.sup_Theta2 = r.sup_Theta3 = -INFINITY;
  for (const SliceDiagnostics& d : r.slices) {
    r.sup_Theta1 = std::max(r.sup_Theta1, d.Theta1);
    r.sup_Theta2 = std::max(r.sup_Theta2, d.Theta2);
    r.sup_Theta3 = std::max(r.sup_Theta3, d.Theta3);
  }

  ShiftField shift = decompose(cfg, params, slices, r.slices, r);
  double sup_sq = 0.0;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    sup_sq = std::max(sup_sq, shift_h1_norm_sq(shift, static_cast<int>(s)));
  }
  r.sup_shift_h1 = std::sqrt(sup_sq);

  const ComparisonField U(chart, shift, params);
  H1Parts tube;
  double grad_U = 0.0;
  for (const PullbackSlice& s : slices) {
    const TubeComparison tc = tube_comparison(s, chart, U);
    tube.l2 += dy0 * tc.difference.l2;
    tube.grad += dy0 * tc.difference.grad;
    grad_U += dy0 * tc.grad_U_sq;
  }
  r.grad_U_l2 = std::sqrt(grad_U);

  r.far_deviation_inside = far.deviation_inside;
  r.far_deviation_outside = far.deviation_outside;
  r.far_deviation = far.deviation_inside + far.deviation_outside;
  r.far_energy = far.energy;
  r.far_grad_sq = far.grad_sq;
  // Outside the tube U is +-1, so u - U there is u -+ 1 and D(u - U) = Du.
  r.h1_error_tube_sq = tube.l2 / eps + eps * tube.grad;
  r.h1_error_far_sq = r.far_deviation / eps + eps * far.grad_sq;
  r.h1_error = std::sqrt(r.h1_error_tube_sq + r.h1_error_far_sq);
  r.shift = std::move(shift);
  r.ok = true;
}

}  // namespace

void write_run_outputs(const RunConfig& cfg, const EpsilonRun& r,
                       const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  }
  write_slice_csv(dir / "slices.csv", r.slices);
  if (r.shift) {
    write_shift_csv(dir / "shift.csv", *r.shift, r.slices);
  }
  json j = run_to_json(r);
  j["config"] = to_json(cfg);
  std::ofstream out(dir / "run.json");
  if (!out) {
    throw IoError("cannot write " + (dir / "run.json").string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing " + (dir / "run.json").string());
  }
}

int far_field_stride(double epsilon, double dt, double cadence_eps) {
  return std::max(1, static_cast<int>(std::lround(cadence_eps * epsilon / dt)));
}

SurfaceChart make_chart(const RunConfig& cfg) {
  const double ext = cfg.T1() + cfg.chart_margin;
  return SurfaceChart(Surface(cfg.resolved_loop()), ChartDomain{-ext, ext, cfg.rho});
}

SliceGrid make_slice_grid(const RunConfig& cfg, double epsilon, double rho) {
  return SliceGrid::midpoints(-cfg.T1(), cfg.T1(), cfg.n_slices, cfg.n1,
                              FiberGrid::for_epsilon(rho, epsilon, cfg.fiber_per_epsilon));
}

GridSpec make_run_grid(const RunConfig& cfg, const SurfaceChart& chart, const SliceGrid& slices,
                       double epsilon, int snapshot_stride) {
  const auto [tlo, thi] = slice_time_range(chart, slices);
  const GridSpec probe = GridSpec::for_interface(epsilon, cfg.t_start, cfg.t_start, cfg.t_start,
                                                 0.0, cfg.h_per_epsilon);
  // Snapshot analysis needs a cubic stencil of snapshots around every slice time.
  const double margin = (4.0 + 2.0 * std::max(0, snapshot_stride)) * probe.dt;
  const double t_begin = std::min({tlo, -cfg.T0, cfg.t_start}) - margin;
  const double t_end = std::max({thi, cfg.T0, cfg.t_start}) + margin;
  const auto [lo, hi] = chart.bounding_box(-cfg.T1(), cfg.T1(), 2.0 * chart.rho());
  const double r_max = std::max({std::abs(lo[1]), std::abs(hi[1]), std::abs(lo[2]), std::abs(hi[2])});
  GridSpec g = GridSpec::for_interface(epsilon, t_begin, cfg.t_start, t_end, r_max,
                                       cfg.h_per_epsilon);
  g.validate(epsilon, r_max);
  return g;
}

EpsilonRun run_epsilon(const RunConfig& cfg, double epsilon, const std::filesystem::path* out_dir,
                       int snapshot_stride) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  EpsilonRun r;
  r.epsilon = epsilon;
  r.mode = cfg.mode;
  const SurfaceChart chart = make_chart(cfg);
  const ProfileParams params = ProfileParams::make(epsilon, chart.rho());
  r.rho = chart.rho();
  const SliceGrid slices = make_slice_grid(cfg, epsilon, chart.rho());
  const GridSpec grid = make_run_grid(cfg, chart, slices, epsilon, out_dir != nullptr ? snapshot_stride : 0);
  r.L = grid.L;
  r.h = grid.h;
  r.dt = grid.dt;
  const int stride = far_field_stride(epsilon, grid.dt, cfg.far_field_cadence);
  FarFieldAccumulator far(chart, cfg.T0, -cfg.T1(), cfg.T1(), epsilon, stride);

  std::ostringstream os;
  os << "eps = " << epsilon << " (" << to_string(cfg.mode) << "): grid " << grid.nx() << "^2, h = "
     << grid.h << ", dt = " << grid.dt << ", t in [" << grid.backward_end() << ", " << grid.t_end
     << "]";
  log_info(os.str());

  std::vector<PullbackSlice> pulled;
  if (cfg.mode == RunMode::solver) {
    StreamingPullback stream(chart, slices, grid);
    std::vector<LevelObserver> observers{std::ref(stream), std::ref(far)};
    std::optional<SnapshotWriter> writer;
    if (out_dir != nullptr && snapshot_stride > 0) {
      writer.emplace(*out_dir / "snapshots", snapshot_stride, epsilon);
      observers.push_back(std::ref(*writer));
    }
    const InitialData data = interface_initial_data(chart, params, grid);
    const EvolveStats stats = evolve(data, grid, epsilon, observers);
    if (writer) {
      writer->finish();
    }
    r.steps = stats.steps_forward + stats.steps_backward;
    r.energy_drift = stats.max_relative_drift;
    pulled = stream.finish();
  } else {
    // u := U_eps with s* = 0, evaluated directly at every sample point.
    const ComparisonField U0(chart, ShiftField::zero(slices), params);
    for (double y0 : slices.y0) {
      pulled.push_back(pullback(U0, chart, y0, slices.fiber, slices.n1));
    }
    emit_comparison_levels(U0, grid, {std::ref(far)}, stride);
  }
  assemble(cfg, chart, params, pulled, far.totals(), slices.dy0(), r);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream done;
  done << "eps = " << epsilon << " finished in " << secs << " s: ||u-U||_H1eps = " << r.h1_error
       << ", sup Theta = (" << r.sup_Theta1 << ", " << r.sup_Theta2 << ", " << r.sup_Theta3 << ")";
  log_info(done.str());
  if (out_dir != nullptr) {
    write_run_outputs(cfg, r, *out_dir);
  }
  return r;
}

EpsilonRun analyze_snapshots(const RunConfig& cfg, double epsilon,
                             const std::filesystem::path& snapshot_dir) {
  const SnapshotStore store = SnapshotStore::load_directory(snapshot_dir);
  EpsilonRun r;
  r.epsilon = epsilon;
  r.mode = RunMode::solver;
  const SurfaceChart chart = make_chart(cfg);
  const ProfileParams params = ProfileParams::make(epsilon, chart.rho());
  r.rho = chart.rho();
  const SliceGrid slices = make_slice_grid(cfg, epsilon, chart.rho());
  std::vector<PullbackSlice> pulled;
  for (double y0 : slices.y0) {
    pulled.push_back(pullback(store, chart, y0, slices.fiber, slices.n1));
  }
  const Snapshot& ref = store[0];
  GridSpec g;
  g.L = ref.L;
  g.h = ref.h;
  g.dt = store.cadence();
  g.t_start = store.t_first();
  g.t_end = store.t_last();
  r.L = g.L;
  r.h = g.h;
  r.dt = g.dt;
  FarFieldAccumulator far(chart, cfg.T0, -cfg.T1(), cfg.T1(), epsilon, 1);
  for (std::size_t k = 1; k + 1 < store.size(); ++k) {
    const LevelView lv{store[k].t, static_cast<long>(k), g.dt, store[k - 1].u, store[k].u,
                       store[k + 1].u, g};
    far(lv);
  }
  assemble(cfg, chart, params, pulled, far.totals(), slices.dy0(), r);
  return r;
}

FitResult fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) {
    throw Error("a rate fit needs at least 3 points");
  }
  const double n = static_cast<double>(pairs.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [e, v] : pairs) {
    if (!(e > 0.0) || !(v > 0.0)) {
      std::ostringstream os;
      os << "rate fit needs positive pairs, got (" << e << ", " << v << ")";
      throw NonPositiveValue(os.str());
    }
    sx += std::log(e);
    sy += std::log(v);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [e, v] : pairs) {
    const double dx = std::log(e) - mx;
    const double dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw Error("rate fit needs at least two distinct epsilons");
  }
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.points = static_cast<int>(pairs.size());
  return f;
}

const std::vector<std::string>& sweep_metrics() {
  static const std::vector<std::string> names = {
      "sup_Theta1",   "sup_Theta2", "sup_Theta3",    "h1_error",   "sup_shift_h1",
      "far_energy",   "far_deviation", "grad_U_l2"};
  return names;
}

double metric_value(const EpsilonRun& r, const std::string& name) {
  if (name == "sup_Theta1") return r.sup_Theta1;
  if (name == "sup_Theta2") return r.sup_Theta2;
  if (name == "sup_Theta3") return r.sup_Theta3;
  if (name == "h1_error") return r.h1_error;
  if (name == "sup_shift_h1") return r.sup_shift_h1;
  if (name == "far_energy") return r.far_energy;
  if (name == "far_deviation") return r.far_deviation;
  if (name == "grad_U_l2") return r.grad_U_l2;
  throw Error("unknown metric '" + name + "'");
}

std::map<std::string, FitOutcome> fit_all(const std::vector<EpsilonRun>& runs) {
  std::map<std::string, FitOutcome> fits;
  for (const std::string& m : sweep_metrics()) {
    std::vector<std::pair<double, double>> pts;
    for (const EpsilonRun& r : runs) {
      if (r.ok) {
        pts.emplace_back(r.epsilon, metric_value(r, m));
      }
    }
    FitOutcome o;
    try {
      o.fit = fit_rate(pts);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    fits[m] = o;
  }
  return fits;
}

std::string run_dir_name(double epsilon) { return "eps_" + format_eps(epsilon); }

SweepReport run_sweep(const RunConfig& cfg, const std::filesystem::path* out_root) {
  cfg.validate();
  SweepReport rep;
  rep.config = cfg;
  rep.runs.resize(cfg.epsilons.size());
  auto one = [&](std::size_t i) {
    const double eps = cfg.epsilons[i];
    std::optional<std::filesystem::path> dir;
    if (out_root != nullptr) {
      dir = *out_root / run_dir_name(eps);
    }
    try {
      return run_epsilon(cfg, eps, dir ? &*dir : nullptr, cfg.snapshot_stride);
    } catch (const std::exception& e) {
      EpsilonRun failed;
      failed.epsilon = eps;
      failed.mode = cfg.mode;
      failed.error = e.what();
      failed.error_kind = kind_of(e);
      log_warning("eps = " + format_eps(eps) + " failed (" + failed.error_kind + "): " + e.what());
      if (dir) {
        try {
          write_run_outputs(cfg, failed, *dir);
        } catch (const std::exception& io) {
          log_warning(std::string("could not record the failure: ") + io.what());
        }
      }
      return failed;
    }
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, cfg.workers));
  for (std::size_t base = 0; base < rep.runs.size(); base += workers) {
    const std::size_t end = std::min(rep.runs.size(), base + workers);
    if (workers == 1) {
      rep.runs[base] = one(base);
      continue;
    }
    std::vector<std::future<EpsilonRun>> jobs;
    for (std::size_t i = base; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, one, i));
    }
    for (std::size_t i = base; i < end; ++i) {
      rep.runs[i] = jobs[i - base].get();
    }
  }
  rep.fits = fit_all(rep.runs);
  return rep;
}

json run_to_json(const EpsilonRun& r) {
  return {{"epsilon", r.epsilon},
          {"mode", to_string(r.mode)},
          {"ok", r.ok},
          {"error", r.error},
          {"error_kind", r.error_kind},
          {"sup_Theta1", r.sup_Theta1},
          {"sup_Theta2", r.sup_Theta2},
          {"sup_Theta3", r.sup_Theta3},
          {"h1_error", r.h1_error},
          {"h1_error_tube_sq", r.h1_error_tube_sq},
          {"h1_error_far_sq", r.h1_error_far_sq},
          {"sup_shift_h1", r.sup_shift_h1},
          {"sup_shift_abs", r.sup_shift_abs},
          {"far_deviation_inside", r.far_deviation_inside},
          {"far_deviation_outside", r.far_deviation_outside},
          {"far_deviation", r.far_deviation},
          {"far_energy", r.far_energy},
          {"far_grad_sq", r.far_grad_sq},
          {"grad_U_l2", r.grad_U_l2},
          {"energy_drift", r.energy_drift},
          {"max_residual_normalized", r.max_residual_normalized},
          {"uncertified_fibers", r.uncertified_fibers},
          {"steps", r.steps},
          {"rho", r.rho},
          {"L", r.L},
          {"h", r.h},
          {"dt", r.dt}};
}

EpsilonRun run_from_json(const json& j) {
  EpsilonRun r;
  try {
    r.epsilon = j.at("epsilon").get<double>();
    r.mode = run_mode_from_string(j.at("mode").get<std::string>());
    r.ok = j.at("ok").get<bool>();
    r.error = j.value("error", "");
    r.error_kind = j.value("error_kind", "");
    auto num = [&](const char* k) { return j.value(k, 0.0); };
    r.sup_Theta1 = num("sup_Theta1");
    r.sup_Theta2 = num("sup_Theta2");
    r.sup_Theta3 = num("sup_Theta3");
    r.h1_error = num("h1_error");
    r.h1_error_tube_sq = num("h1_error_tube_sq");
    r.h1_error_far_sq = num("h1_error_far_sq");
    r.sup_shift_h1 = num("sup_shift_h1");
    r.sup_shift_abs = num("sup_shift_abs");
    r.far_deviation_inside = num("far_deviation_inside");
    r.far_deviation_outside = num("far_deviation_outside");
    r.far_deviation = num("far_deviation");
    r.far_energy = num("far_energy");
    r.far_grad_sq = num("far_grad_sq");
    r.grad_U_l2 = num("grad_U_l2");
    r.energy_drift = num("energy_drift");
    r.max_residual_normalized = num("max_residual_normalized");
    r.uncertified_fibers = j.value("uncertified_fibers", 0);
    r.steps = j.value("steps", 0L);
    r.rho = num("rho");
    r.L = num("L");
    r.h = num("h");
    r.dt = num("dt");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

}  // namespace iface
