#include "stclab/disturbances.hpp"

#include <algorithm>
#include <cmath>

#include "stclab/core.hpp"

namespace stclab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Integral of the unit ramp max(0, t - t0) over [a, b], split at the kink.
double ramp_integral(double t0, double a, double b) {
  const double lo = std::max(a, t0);
  if (b <= lo) return 0.0;
  return 0.5 * ((b - t0) * (b - t0) - (lo - t0) * (lo - t0));
}

}  // namespace

void DisturbanceSignal::validate() const {
  std::visit(overloaded{
                 [](const ZeroDisturbance&) {},
                 [](const StepDisturbance& s) {
                   if (!(s.t0 >= 0.0) || !std::isfinite(s.level)) {
                     throw ParameterError("step disturbance needs t0 >= 0 and finite level");
                   }
                 },
                 [](const SinusoidMix& m) {
                   for (const auto& term : m.terms) {
                     if (!(term.omega > 0.0) || !std::isfinite(term.amplitude)) {
                       throw ParameterError("sinusoid terms need omega > 0");
                     }
                   }
                 },
             },
             kind);
  if (!std::isfinite(phi0)) throw ParameterError("phi0 must be finite");
}

DisturbanceSignal zero_signal(double phi0) { return {ZeroDisturbance{}, phi0}; }

DisturbanceSignal step_signal(double t0, double level, double phi0) {
  DisturbanceSignal s{StepDisturbance{t0, level}, phi0};
  s.validate();
  return s;
}

DisturbanceSignal sinusoid_signal(std::vector<SinusoidTerm> terms, double offset, double phi0) {
  DisturbanceSignal s{SinusoidMix{std::move(terms), offset}, phi0};
  s.validate();
  return s;
}

DisturbanceSignal signal_by_name(std::string_view name) {
  const double r10 = std::sqrt(10.0);
  if (name == "zero") return zero_signal();
  if (name == "step") return step_signal(1.0, 1.0);
  if (name == "sin") return sinusoid_signal({{1.2, 2.0}, {0.4 * r10, r10}}, 0.0);
  if (name == "sin-offset5") return sinusoid_signal({{1.2, 2.0}, {0.4 * r10, r10}}, 5.0);
  throw ConfigurationError("unknown disturbance signal '" + std::string(name) + "'");
}

std::vector<std::string> signal_names() { return {"zero", "step", "sin", "sin-offset5"}; }

double delta_of_t(const DisturbanceSignal& signal, double t) {
  return std::visit(overloaded{
                        [](const ZeroDisturbance&) { return 0.0; },
                        [t](const StepDisturbance& s) { return t >= s.t0 ? s.level : 0.0; },
                        [t](const SinusoidMix& m) {
                          double v = m.offset;
                          for (const auto& term : m.terms) v += term.amplitude * std::cos(term.omega * t);
                          return v;
                        },
                    },
                    signal.kind);
}

double phi_of_t(const DisturbanceSignal& signal, double t) {
  return signal.phi0 +
         std::visit(overloaded{
                        [](const ZeroDisturbance&) { return 0.0; },
                        [t](const StepDisturbance& s) { return s.level * std::max(0.0, t - s.t0); },
                        [t](const SinusoidMix& m) {
                          double v = m.offset * t;
                          for (const auto& term : m.terms) {
                            v += term.amplitude / term.omega * std::sin(term.omega * t);
                          }
                          return v;
                        },
                    },
                    signal.kind);
}

double phi_bar(const DisturbanceSignal& signal, long k, double h) {
  const double a = static_cast<double>(k) * h;
  const double b = static_cast<double>(k + 1) * h;
  const double mid = 0.5 * (a + b);
  return signal.phi0 +
         std::visit(overloaded{
                        [](const ZeroDisturbance&) { return 0.0; },
                        [&](const StepDisturbance& s) { return s.level * ramp_integral(s.t0, a, b) / h; },
                        [&](const SinusoidMix& m) {
                          // (1/h) int_a^b sin(w t)/w dt = 2 sin(w mid) sin(w h/2) / (w^2 h)
                          double v = m.offset * mid;
                          for (const auto& term : m.terms) {
                            const double w = term.omega;
                            v += term.amplitude * 2.0 * std::sin(w * mid) * std::sin(0.5 * w * h) /
                                 (w * w * h);
                          }
                          return v;
                        },
                    },
                    signal.kind);
}

double delta_bar(const DisturbanceSignal& signal, long k, double h) {
  // Closed forms of (phi_bar[k+1] - phi_bar[k]) / h; differencing phi_bar
  // directly loses |phi| eps / h late in long horizons.
  const double a = static_cast<double>(k) * h;
  return std::visit(overloaded{
                        [](const ZeroDisturbance&) { return 0.0; },
                        [&](const StepDisturbance& s) {
                          if (a >= s.t0) return s.level;
                          if (a + 2.0 * h <= s.t0) return 0.0;
                          // Second difference of (t - t0)_+^2 / 2 in local time.
                          const double u = a - s.t0;
                          auto sq = [](double x) { return x > 0.0 ? x * x : 0.0; };
                          return s.level * (sq(u + 2.0 * h) - 2.0 * sq(u + h) + sq(u)) / (2.0 * h * h);
                        },
                        [&](const SinusoidMix& m) {
                          // Triangle-weighted mean of cos(w t) centred at a + h.
                          double v = m.offset;
                          for (const auto& term : m.terms) {
                            const double x = 0.5 * term.omega * h;
                            const double sinc = std::sin(x) / x;
                            v += term.amplitude * std::cos(term.omega * (a + h)) * sinc * sinc;
                          }
                          return v;
                        },
                    },
                    signal.kind);
}

double lipschitz_bound(const DisturbanceSignal& signal) {
  return std::visit(overloaded{
                        [](const ZeroDisturbance&) { return 0.0; },
                        [](const StepDisturbance& s) { return std::abs(s.level); },
                        [](const SinusoidMix& m) {
                          double v = std::abs(m.offset);
                          for (const auto& term : m.terms) v += std::abs(term.amplitude);
                          return v;
                        },
                    },
                    signal.kind);
}

}  // namespace stclab
