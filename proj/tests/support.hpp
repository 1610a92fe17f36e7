#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "iface/log.hpp"

namespace testing {

/// Seeded generator for the property tests; every suite uses its own seed so
/// failures reproduce.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen_); }

 private:
  std::mt19937_64 gen_;
};

/// Silences library logging for the lifetime of the object.
class QuietLog {
 public:
  QuietLog() : prev_(iface::set_log_sink([](iface::LogLevel, const std::string&) {})) {}
  ~QuietLog() { iface::set_log_sink(prev_); }
  QuietLog(const QuietLog&) = delete;
  QuietLog& operator=(const QuietLog&) = delete;

 private:
  iface::LogSink prev_;
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("iface_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
