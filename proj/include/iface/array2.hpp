#pragma once

#include <cstddef>
#include <vector>

namespace iface {

/// Dense row-major 2D array; index (i, j) with i fastest.
class Array2 {
 public:
  Array2() = default;
  Array2(int nx, int ny, double fill = 0.0)
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const Array2&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> data_;
};

}  // namespace iface
