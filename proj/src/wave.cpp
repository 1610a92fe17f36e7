#include "iface/wave.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iface/errors.hpp"
#include "iface/log.hpp"

namespace iface {

int GridSpec::nx() const { return static_cast<int>(std::lround(2.0 * L / h)) + 1; }

int GridSpec::ny() const {
  return boundary == BoundaryMode::dirichlet_box ? nx() : strip_ny;
}

double GridSpec::x2(int j) const {
  return boundary == BoundaryMode::dirichlet_box ? -L + j * h : j * h;
}

double GridSpec::backward_end() const { return std::isnan(t_begin) ? t_start : t_begin; }

double GridSpec::span() const {
  return std::max(t_end - t_start, t_start - backward_end());
}

GridSpec GridSpec::for_interface(double epsilon, double t_begin, double t_start, double t_end,
                                 double r_max, double h_per_epsilon) {
  GridSpec g;
  g.h = epsilon / h_per_epsilon;
  g.dt = std::min(cfl_safety * g.h / std::sqrt(2.0), 0.2 * epsilon);
  g.t_start = t_start;
  g.t_end = t_end;
  g.t_begin = t_begin;
  const double need = r_max + g.span() + 0.5;
  g.L = std::ceil(need / g.h - 1e-9) * g.h;
  return g;
}

void GridSpec::validate(double epsilon, double r_max) const {
  std::ostringstream os;
  if (!(h > 0.0 && dt > 0.0 && L > 0.0)) {
    os << "grid needs h, dt, L > 0";
  } else if (h > epsilon / 8.0 * (1.0 + 1e-12)) {
    os << "h = " << h << " exceeds epsilon/8 = " << epsilon / 8.0;
  } else if (dt > std::min(cfl_safety * h / std::sqrt(2.0), 0.2 * epsilon) * (1.0 + 1e-12)) {
    os << "dt = " << dt << " violates dt <= min(" << cfl_safety << " h/sqrt2, 0.2 eps)";
  } else if (!(backward_end() <= t_start && t_start <= t_end)) {
    os << "need t_begin <= t_start <= t_end";
  } else if (r_max >= 0.0 && L < r_max + span() + 0.5 - 1e-12) {
    os << "box half-width L = " << L << " below r_max + span + 0.5 = " << r_max + span() + 0.5;
  } else if (nx() < 5 || (boundary == BoundaryMode::periodic_x2_strip && strip_ny < 3)) {
    os << "grid too small";
  } else {
    return;
  }
  throw InvalidGrid(os.str());
}

namespace {

double potential_force(double u, double epsilon) {
  return 2.0 / (epsilon * epsilon) * (u * u - 1.0) * u;
}

// Discrete acceleration Lap_h u - F'(u) at interior node (i, j).
inline double accel(const Array2& u, int i, int j, int jm, int jp, double inv_h2,
                    double epsilon) {
  const double c = u(i, j);
  // Pairwise sums keep the update exactly invariant under grid rotations.
  const double lap = ((u(i + 1, j) + u(i - 1, j)) + (u(i, jp) + u(i, jm)) - 4.0 * c) * inv_h2;
  return lap - potential_force(c, epsilon);
}

struct RowRange {
  int j_lo;
  int j_hi;
  bool periodic;
};

RowRange rows(const GridSpec& g) {
  if (g.boundary == BoundaryMode::periodic_x2_strip) {
    return {0, g.ny() - 1, true};
  }
  return {1, g.ny() - 2, false};
}

// next = 2 curr - prev + dt^2 accel(curr); frozen boundary. Returns max |next|.
double advance_into(const Array2& prev, const Array2& curr, Array2& next, const GridSpec& g,
                    double epsilon, double dt) {
  const int nx = curr.nx();
  const int ny = curr.ny();
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double dt2 = dt * dt;
  const RowRange r = rows(g);
  std::vector<double> row_max(ny, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    double m = 0.0;
    if (j < r.j_lo || j > r.j_hi) {
      for (int i = 0; i < nx; ++i) {
        next(i, j) = curr(i, j);
        m = std::max(m, std::abs(next(i, j)));
      }
    } else {
      const int jm = r.periodic ? (j + ny - 1) % ny : j - 1;
      const int jp = r.periodic ? (j + 1) % ny : j + 1;
      next(0, j) = curr(0, j);
      next(nx - 1, j) = curr(nx - 1, j);
      m = std::max(std::abs(next(0, j)), std::abs(next(nx - 1, j)));
      for (int i = 1; i < nx - 1; ++i) {
        const double v =
            2.0 * curr(i, j) - prev(i, j) + dt2 * accel(curr, i, j, jm, jp, inv_h2, epsilon);
        next(i, j) = v;
        const double a = std::abs(v);
        m = a > m || std::isnan(v) ? (std::isnan(v) ? INFINITY : a) : m;
      }
    }
    row_max[j] = m;
  }
  return *std::max_element(row_max.begin(), row_max.end());
}

void check_blowup(double max_abs, double t) {
  if (!(max_abs <= SpacetimeField::blowup_guard)) {
    std::ostringstream os;
    os << "|u| = " << max_abs << " exceeds " << SpacetimeField::blowup_guard << " at t = " << t
       << "; the scheme is unstable for this grid";
    throw BlowUp(os.str());
  }
}

// Taylor level u(t_start + dt) = u + dt u_t + dt^2/2 accel(u).
Array2 taylor_level(const InitialData& d, const GridSpec& g, double epsilon, double dt) {
  const int nx = d.u.nx();
  const int ny = d.u.ny();
  Array2 out = d.u;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const RowRange r = rows(g);
  for (int j = r.j_lo; j <= r.j_hi; ++j) {
    const int jm = r.periodic ? (j + ny - 1) % ny : j - 1;
    const int jp = r.periodic ? (j + 1) % ny : j + 1;
    for (int i = 1; i < nx - 1; ++i) {
      out(i, j) = d.u(i, j) + dt * d.u_t(i, j) +
                  0.5 * dt * dt * accel(d.u, i, j, jm, jp, inv_h2, epsilon);
    }
  }
  return out;
}

}  // namespace

InitialData interface_initial_data(const SurfaceChart& chart, const ProfileParams& params,
                                   const GridSpec& grid) {
  if (grid.boundary != BoundaryMode::dirichlet_box) {
    throw InvalidGrid("interface data needs the Dirichlet box grid");
  }
  const ChartDomain& dom = chart.domain();
  if (!(grid.t_start > dom.y0_min && grid.t_start < dom.y0_max)) {
    std::ostringstream os;
    os << "t_start = " << grid.t_start << " lies outside the chart range (" << dom.y0_min << ", "
       << dom.y0_max << ")";
    throw ChartUnavailable(os.str());
  }
  const int n = grid.nx();
  const GridClassification cls =
      classify_grid(chart, grid.t_start, -grid.L, -grid.L, grid.h, n, n);
  InitialData d{Array2(n, n, -1.0), Array2(n, n, 0.0)};
  const double rho2 = 2.0 * chart.rho();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t k = cls.index(i, j);
      const ChartPoint& cp = cls.points[k];
      if (!cp.inside_tube) {
        d.u(i, j) = cls.sign[k];
        continue;
      }
      if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
        throw InvalidGrid("the tube touches the box boundary; enlarge L");
      }
      const double dist = std::clamp(cp.y2, -rho2, rho2);
      const Jet1 Q = Q_eps_jet(dist, params);
      const Mat3 J = chart.surface().map_and_jacobian(cp.y0, cp.y1, cp.y2).second;
      // d_t y2 is the (2, 0) entry of the inverse Jacobian.
      const double dt_y2 = J.inverse()(2, 0);
      d.u(i, j) = Q.v;
      d.u_t(i, j) = Q.d1 * dt_y2;
    }
  }
  return d;
}

SpacetimeField start_field(const InitialData& data, const GridSpec& grid, double epsilon,
                           double direction) {
  if (data.u.nx() != grid.nx() || data.u.ny() != grid.ny()) {
    throw InvalidGrid("initial data shape does not match the grid");
  }
  SpacetimeField f;
  f.grid = grid;
  f.epsilon = epsilon;
  f.dt_signed = direction < 0.0 ? -grid.dt : grid.dt;
  f.u_prev = data.u;
  f.u_curr = taylor_level(data, grid, epsilon, f.dt_signed);
  f.scratch = Array2(grid.nx(), grid.ny());
  f.t = grid.t_start + f.dt_signed;
  f.level = direction < 0.0 ? -1 : 1;
  return f;
}

SpacetimeField prepare_initial_data(const SurfaceChart& chart, const ProfileParams& params,
                                    const GridSpec& grid) {
  return start_field(interface_initial_data(chart, params, grid), grid, params.epsilon, 1.0);
}

void step(SpacetimeField& f) {
  const double m = advance_into(f.u_prev, f.u_curr, f.scratch, f.grid, f.epsilon, f.dt_signed);
  check_blowup(m, f.t + f.dt_signed);
  std::swap(f.u_prev, f.u_curr);
  std::swap(f.u_curr, f.scratch);
  f.t += f.dt_signed;
  f.level += f.dt_signed < 0.0 ? -1 : 1;
}

double level_energy(const Array2& prev, const Array2& curr, const Array2& next,
                    const GridSpec& grid, double epsilon) {
  const int nx = curr.nx();
  const int ny = curr.ny();
  const bool periodic = grid.boundary == BoundaryMode::periodic_x2_strip;
  const double h = grid.h;
  const double dt = grid.dt;
  std::vector<double> row(ny, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    double s = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double c = curr(i, j);
      const double ut = (next(i, j) - prev(i, j)) / (2.0 * dt);
      const double w = c * c - 1.0;
      s += 0.5 * ut * ut + w * w / (2.0 * epsilon * epsilon);
      if (i + 1 < nx) {
        const double gx = (curr(i + 1, j) - c) / h;
        s += 0.5 * gx * gx;
      }
      if (j + 1 < ny || periodic) {
        const double gy = (curr(i, (j + 1) % ny) - c) / h;
        s += 0.5 * gy * gy;
      }
    }
    row[j] = s;
  }
  double total = 0.0;
  for (double r : row) {
    total += r;
  }
  return total * h * h;
}

double total_energy(const SpacetimeField& f) {
  Array2 next(f.u_curr.nx(), f.u_curr.ny());
  advance_into(f.u_prev, f.u_curr, next, f.grid, f.epsilon, f.dt_signed);
  return level_energy(f.u_prev, f.u_curr, next, f.grid, f.epsilon);
}

EvolveStats evolve(const InitialData& data, const GridSpec& grid, double epsilon,
                   const std::vector<LevelObserver>& observers, int energy_stride) {
  EvolveStats st;
  const long n_fwd = static_cast<long>(std::ceil((grid.t_end - grid.t_start) / grid.dt - 1e-9));
  const long n_bwd =
      static_cast<long>(std::ceil((grid.t_start - grid.backward_end()) / grid.dt - 1e-9));

  auto emit = [&](const LevelView& lv) {
    for (const auto& ob : observers) {
      ob(lv);
    }
  };
  auto track_energy = [&](const LevelView& lv) {
    if (energy_stride <= 0 || lv.level % energy_stride != 0) {
      return;
    }
    const double e = level_energy(lv.prev, lv.curr, lv.next, grid, epsilon);
    if (lv.level == 0) {
      st.energy_initial = e;
    } else if (st.energy_initial > 0.0) {
      st.max_relative_drift =
          std::max(st.max_relative_drift, std::abs(e - st.energy_initial) / st.energy_initial);
    }
  };

  // Level 0 needs both Taylor neighbours.
  SpacetimeField fwd = start_field(data, grid, epsilon, 1.0);
  SpacetimeField bwd = start_field(data, grid, epsilon, -1.0);
  {
    LevelView lv{grid.t_start, 0, grid.dt, bwd.u_curr, data.u, fwd.u_curr, grid};
    track_energy(lv);
    emit(lv);
  }
  for (SpacetimeField* f : {&fwd, &bwd}) {
    const long n = f == &fwd ? n_fwd : n_bwd;
    for (long k = 1; k <= n; ++k) {
      // f holds levels k-1 (prev) and k (curr); compute k+1 into scratch.
      const double m =
          advance_into(f->u_prev, f->u_curr, f->scratch, grid, epsilon, f->dt_signed);
      check_blowup(m, f->t + f->dt_signed);
      LevelView lv{f->t, f->level, f->dt_signed, f->u_prev, f->u_curr, f->scratch, grid};
      track_energy(lv);
      emit(lv);
      std::swap(f->u_prev, f->u_curr);
      std::swap(f->u_curr, f->scratch);
      f->t += f->dt_signed;
      f->level += f->dt_signed < 0.0 ? -1 : 1;
    }
    (f == &fwd ? st.steps_forward : st.steps_backward) = n;
  }
  if (st.max_relative_drift > 0.01) {
    std::ostringstream os;
    os << "energy drift " << st.max_relative_drift << " exceeds 1%";
    log_warning(os.str());
  }
  return st;
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void write_snapshot(const Snapshot& s, const std::filesystem::path& stem) {
  const auto bin = with_ext(stem, ".bin");
  const auto meta = with_ext(stem, ".json");
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) {
      throw IoError("cannot open snapshot for writing: " + bin.string());
    }
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(s.u.data()),
                static_cast<std::streamsize>(s.u.size() * sizeof(double)));
    } else {
      for (double v : s.u.values()) {
        auto bits = __builtin_bswap64(std::bit_cast<std::uint64_t>(v));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
    }
    if (!out) {
      throw IoError("failed writing snapshot: " + bin.string());
    }
  }
  nlohmann::json j = {{"t", s.t},       {"h", s.h},          {"L", s.L},
                      {"epsilon", s.epsilon}, {"nx", s.u.nx()}, {"ny", s.u.ny()},
                      {"i0", s.i0},     {"j0", s.j0},        {"format", "float64-le"}};
  std::ofstream out(meta);
  if (!out) {
    throw IoError("cannot open snapshot header for writing: " + meta.string());
  }
  out << std::setprecision(17) << j.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing snapshot header: " + meta.string());
  }
}

Snapshot read_snapshot(const std::filesystem::path& stem) {
  const auto bin = with_ext(stem, ".bin");
  const auto meta = with_ext(stem, ".json");
  std::ifstream in(meta);
  if (!in) {
    throw IoError("cannot open snapshot header: " + meta.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed snapshot header " + meta.string() + ": " + e.what());
  }
  Snapshot s;
  try {
    s.t = j.at("t");
    s.h = j.at("h");
    s.L = j.at("L");
    s.epsilon = j.at("epsilon");
    s.i0 = j.at("i0");
    s.j0 = j.at("j0");
    s.u = Array2(j.at("nx").get<int>(), j.at("ny").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("incomplete snapshot header " + meta.string() + ": " + e.what());
  }
  std::ifstream data(bin, std::ios::binary);
  if (!data) {
    throw IoError("cannot open snapshot data: " + bin.string());
  }
  data.read(reinterpret_cast<char*>(s.u.data()),
            static_cast<std::streamsize>(s.u.size() * sizeof(double)));
  if (data.gcount() != static_cast<std::streamsize>(s.u.size() * sizeof(double))) {
    throw IoError("truncated snapshot data: " + bin.string());
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : s.u.values()) {
      v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
    }
  }
  return s;
}

SnapshotWriter::SnapshotWriter(std::filesystem::path dir, int stride, double epsilon)
    : dir_(std::move(dir)), stride_(stride), epsilon_(epsilon) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw IoError("cannot create snapshot directory " + dir_.string() + ": " + ec.message());
  }
}

void SnapshotWriter::write(const LevelView& lv) {
  Snapshot s{lv.t, lv.grid.h, lv.grid.L, epsilon_, 0, 0, lv.curr};
  char name[64];
  std::snprintf(name, sizeof name, "snap_%c%07ld", lv.level < 0 ? 'm' : 'p', std::labs(lv.level));
  const auto stem = dir_ / name;
  write_snapshot(s, stem);
  written_.push_back(stem);
  last_written_ = lv.level;
}

void SnapshotWriter::operator()(const LevelView& lv) {
  const bool first = written_.empty() && !have_last_;
  if (first || (stride_ > 0 && lv.level % stride_ == 0)) {
    write(lv);
  }
  have_last_ = true;
  last_level_ = lv.level;
  last_ = Snapshot{lv.t, lv.grid.h, lv.grid.L, epsilon_, 0, 0, lv.curr};
}

std::vector<std::filesystem::path> SnapshotWriter::finish() {
  if (have_last_ && last_written_ != last_level_) {
    char name[64];
    std::snprintf(name, sizeof name, "snap_%c%07ld", last_level_ < 0 ? 'm' : 'p',
                  std::labs(last_level_));
    const auto stem = dir_ / name;
    write_snapshot(last_, stem);
    written_.push_back(stem);
    last_written_ = last_level_;
  }
  return written_;
}

}  // namespace iface
