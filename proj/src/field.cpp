#include "iface/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iface/errors.hpp"
#include "iface/log.hpp"

namespace iface {

bool make_spatial_stencil(double x1, double x2, double x0, double y0, double h, int nx, int ny,
                          SpatialStencil& out) {
  const double rx = (x1 - x0) / h;
  const double ry = (x2 - y0) / h;
  if (!std::isfinite(rx) || !std::isfinite(ry)) {
    return false;
  }
  const int bx = static_cast<int>(std::floor(rx));
  const int by = static_cast<int>(std::floor(ry));
  out.i0 = bx - 2;
  out.j0 = by - 2;
  if (out.i0 < 0 || out.j0 < 0 || out.i0 + 6 > nx || out.j0 + 6 > ny) {
    return false;
  }
  out.sx = lagrange_stencil<6>(rx - bx, -2);
  out.sy = lagrange_stencil<6>(ry - by, -2);
  return true;
}

FieldSample apply_stencil(const Array2& u, const SpatialStencil& s, double h) {
  FieldSample r;
  for (int b = 0; b < 6; ++b) {
    double row = 0.0;
    double drow = 0.0;
    for (int a = 0; a < 6; ++a) {
      const double v = u(s.i0 + a, s.j0 + b);
      row += s.sx.w[a] * v;
      drow += s.sx.dw[a] * v;
    }
    r.u += s.sy.w[b] * row;
    r.u_x1 += s.sy.w[b] * drow;
    r.u_x2 += s.sy.dw[b] * row;
  }
  r.u_x1 /= h;
  r.u_x2 /= h;
  return r;
}

void SnapshotStore::add(Snapshot s) {
  if (!snaps_.empty()) {
    const Snapshot& f = snaps_.front();
    if (s.h != f.h || s.L != f.L || s.i0 != f.i0 || s.j0 != f.j0 || s.u.nx() != f.u.nx() ||
        s.u.ny() != f.u.ny()) {
      throw InsufficientSnapshots("snapshot grid differs from the store");
    }
    const double gap = s.t - snaps_.back().t;
    if (!(gap > 0.0)) {
      throw InsufficientSnapshots("snapshots must arrive in increasing time");
    }
    if (snaps_.size() == 1) {
      cadence_ = gap;
    } else if (std::abs(gap - cadence_) > 1e-9 * std::max(1.0, cadence_)) {
      std::ostringstream os;
      os << "non-uniform snapshot cadence: " << gap << " vs " << cadence_;
      throw InsufficientSnapshots(os.str());
    }
  }
  snaps_.push_back(std::move(s));
}

SnapshotStore SnapshotStore::load_directory(const std::filesystem::path& dir) {
  std::vector<Snapshot> all;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto& p = entry.path();
    if (p.extension() == ".json" && p.filename().string().rfind("snap_", 0) == 0) {
      auto stem = p;
      stem.replace_extension();
      all.push_back(read_snapshot(stem));
    }
  }
  if (ec) {
    throw IoError("cannot list snapshot directory " + dir.string() + ": " + ec.message());
  }
  if (all.size() < 4) {
    throw InsufficientSnapshots("fewer than 4 snapshots in " + dir.string());
  }
  std::sort(all.begin(), all.end(), [](const Snapshot& a, const Snapshot& b) { return a.t < b.t; });
  std::vector<double> gaps;
  for (std::size_t i = 1; i < all.size(); ++i) {
    gaps.push_back(all[i].t - all[i - 1].t);
  }
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double cadence = gaps[gaps.size() / 2];
  const double t_ref = all[all.size() / 2].t;
  SnapshotStore store;
  std::size_t dropped = 0;
  for (auto& s : all) {
    const double k = (s.t - t_ref) / cadence;
    if (std::abs(k - std::round(k)) < 1e-6) {
      store.add(std::move(s));
    } else {
      ++dropped;
    }
  }
  if (dropped > 0) {
    log_info("skipped " + std::to_string(dropped) + " off-cadence snapshot(s) in " + dir.string());
  }
  return store;
}

double SnapshotStore::t_first() const {
  if (snaps_.empty()) {
    throw InsufficientSnapshots("empty snapshot store");
  }
  return snaps_.front().t;
}

double SnapshotStore::t_last() const {
  if (snaps_.empty()) {
    throw InsufficientSnapshots("empty snapshot store");
  }
  return snaps_.back().t;
}

FieldSample SnapshotStore::sample(double t, double x1, double x2) const {
  if (snaps_.size() < 4) {
    throw InsufficientSnapshots("need at least 4 snapshots for cubic time interpolation");
  }
  const double r = (t - snaps_.front().t) / cadence_;
  const int b = static_cast<int>(std::floor(r));
  if (!(b - 1 >= 0 && b + 2 < static_cast<int>(snaps_.size()))) {
    std::ostringstream os;
    os << "t = " << t << " lacks a cubic stencil in [" << t_first() << ", " << t_last() << "]";
    throw InsufficientSnapshots(os.str());
  }
  const LagrangeStencil<4> st = lagrange_stencil<4>(r - b, -1);
  const Snapshot& ref = snaps_.front();
  SpatialStencil sp;
  if (!make_spatial_stencil(x1, x2, -ref.L + ref.i0 * ref.h, -ref.L + ref.j0 * ref.h, ref.h,
                            ref.u.nx(), ref.u.ny(), sp)) {
    std::ostringstream os;
    os << "(" << x1 << ", " << x2 << ") outside the stored window";
    throw OutOfBox(os.str());
  }
  FieldSample out;
  for (int k = 0; k < 4; ++k) {
    const FieldSample s = apply_stencil(snaps_[b - 1 + k].u, sp, ref.h);
    out.u += st.w[k] * s.u;
    out.u_t += st.dw[k] * s.u;
    out.u_x1 += st.w[k] * s.u_x1;
    out.u_x2 += st.w[k] * s.u_x2;
  }
  out.u_t /= cadence_;
  return out;
}

}  // namespace iface
