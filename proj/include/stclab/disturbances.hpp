#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stclab {

struct ZeroDisturbance {};

/// Delta(t) = level for t >= t0, zero before.
struct StepDisturbance {
  double t0 = 0.0;
  double level = 0.0;
};

struct SinusoidTerm {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s, > 0
};

/// Delta(t) = sum A_i cos(omega_i t) + offset.
struct SinusoidMix {
  std::vector<SinusoidTerm> terms;
  double offset = 0.0;
};

/// Analytic disturbance Delta(t) together with the initial perturbation
/// phi(0). phi is the antiderivative of Delta.
struct DisturbanceSignal {
  std::variant<ZeroDisturbance, StepDisturbance, SinusoidMix> kind;
  double phi0 = 0.0;

  /// Throws ParameterError on non-positive frequencies or negative t0.
  void validate() const;
};

DisturbanceSignal zero_signal(double phi0 = 0.0);
DisturbanceSignal step_signal(double t0, double level, double phi0 = 0.0);
DisturbanceSignal sinusoid_signal(std::vector<SinusoidTerm> terms, double offset,
                                  double phi0 = 0.0);

/// Catalog: "zero", "step" (Delta = 1 for t >= 1), "sin"
/// (1.2 cos 2t + 0.4 sqrt10 cos sqrt10 t) and "sin-offset5" (same plus 5).
/// Throws ConfigurationError for unknown names.
DisturbanceSignal signal_by_name(std::string_view name);
std::vector<std::string> signal_names();

/// Delta(t).
double delta_of_t(const DisturbanceSignal& signal, double t);

/// phi(t) = phi0 + integral_0^t Delta.
double phi_of_t(const DisturbanceSignal& signal, double t);

/// Mean of phi over [kh, (k+1)h], in closed form.
double phi_bar(const DisturbanceSignal& signal, long k, double h);

/// Virtual discrete input (phi_bar(k+1) - phi_bar(k)) / h.
double delta_bar(const DisturbanceSignal& signal, long k, double h);

/// Closed-form bound on |Delta|: sum |A_i| + |offset| or |level|.
double lipschitz_bound(const DisturbanceSignal& signal);

}  // namespace stclab
