#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stno/vec3.hpp"

namespace stno {

/// Integrator produced a non-finite derivative; carries where it happened.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, const Vec3& m)
      : std::runtime_error(what), t_(t), m_(m) {}
  double t() const { return t_; }
  const Vec3& state() const { return m_; }

 private:
  double t_;
  Vec3 m_;
};

/// No spectral peak rises above the noise floor.
class NoOscillationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Channel planning could not satisfy the frequency/bias constraints.
class PlanningError : public std::runtime_error {
 public:
  PlanningError(const std::string& what, int channel)
      : std::runtime_error(what), channel_(channel) {}
  int channel() const { return channel_; }

 private:
  int channel_;
};

/// Bias calibration did not converge; carries the (bias, frequency) probes.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, std::vector<std::pair<double, double>> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<std::pair<double, double>>& trace() const { return trace_; }

 private:
  std::vector<std::pair<double, double>> trace_;
};

/// Configuration document rejected; carries key path and source line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key_path, int line)
      : std::runtime_error(what + " (key '" + key_path + "', line " + std::to_string(line) + ")"),
        key_path_(std::move(key_path)),
        line_(line) {}
  const std::string& key_path() const { return key_path_; }
  int line() const { return line_; }

 private:
  std::string key_path_;
  int line_;
};

}  // namespace stno
