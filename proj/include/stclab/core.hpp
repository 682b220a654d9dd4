#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace stclab {

// Error hierarchy. Each maps onto one failure class of the library surface.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Controller and plant parameters. Time is in seconds, everything else is
/// dimensionless.
struct GainSet {
  double alpha = 0.0;
  double beta = 0.0;
  double h = 0.0;
  std::optional<double> gamma;  // low-chattering variant only
  double lipschitz_L = 0.0;

  /// Throws ParameterError if any invariant is violated.
  void validate() const;
};

/// Sampled plant state: x1 at t = kh and the interval-averaged perturbation.
struct PlantState {
  double x1 = 0.0;
  double phi_bar = 0.0;
};

/// Closed-loop coordinates (x1, x2) with x2 = nu + phi_bar.
struct VirtualState {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Single-valued signum with sign(0) = 0.
constexpr double sign(double x) noexcept {
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

/// Signed power sign(x)|x|^y. For y = 0 this reduces to sign(x).
inline double sgnpow(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return sign(x);
  if (y == 0.5) return sign(x) * std::sqrt(std::abs(x));
  if (y == 1.0) return x;
  return sign(x) * std::pow(std::abs(x), y);
}

/// Unit saturation: identity on (-1, 1), sign(x) elsewhere.
constexpr double sat(double x) noexcept {
  if (x < 1.0 && x > -1.0) return x;
  return sign(x);
}

}  // namespace stclab
