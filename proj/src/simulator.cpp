#include "stclab/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace stclab {

namespace {

long floor_ratio(double num, double den) {
  // Absorbs representation error such as 20 / 0.01 = 1999.9999999999998.
  return static_cast<long>(std::floor(num / den * (1.0 + 1e-12)));
}

bool diverged(double x1, double x2) {
  return !std::isfinite(x1) || !std::isfinite(x2) || std::abs(x1) > kDivergenceLimit ||
         std::abs(x2) > kDivergenceLimit;
}

void push_row(SimTrace& tr, double t, double x1, double phi, double nu, double u, double delta) {
  tr.t.push_back(t);
  tr.x1.push_back(x1);
  tr.phi_bar.push_back(phi);
  tr.nu.push_back(nu);
  tr.x2.push_back(nu + phi);
  tr.u.push_back(u);
  tr.delta_bar.push_back(delta);
}

}  // namespace

long SimConfig::steps() const {
  if (!(gains.h > 0.0)) throw ParameterError("h must be positive");
  if (!(horizon_T >= gains.h)) {
    throw ConfigurationError("horizon " + std::to_string(horizon_T) +
                             " is shorter than one step h = " + std::to_string(gains.h));
  }
  const long n = floor_ratio(horizon_T, gains.h);
  if (n < 1) throw ConfigurationError("horizon yields no simulation steps");
  return n;
}

void SimConfig::validate() const {
  gains.validate();
  signal.validate();
  if (!std::isfinite(x1_0) || !std::isfinite(nu_0)) {
    throw ParameterError("initial conditions must be finite");
  }
  steps();
  (void)effective_gains(*this);
}

void SimTrace::reserve(std::size_t n) {
  for (auto* v : {&t, &x1, &phi_bar, &nu, &x2, &u, &delta_bar}) v->reserve(n);
}

DivergedError::DivergedError(long step, SimTrace partial)
    : std::runtime_error("simulation diverged at step " + std::to_string(step)),
      step_(step),
      partial_(std::move(partial)) {}

GainSet effective_gains(const SimConfig& cfg) {
  GainSet g = cfg.gains;
  if (cfg.variant == ControllerVariant::Hanan) {
    if (cfg.hanan_G) {
      g.gamma = hanan_gamma(g, *cfg.hanan_G);
    } else if (!g.gamma) {
      throw ConfigurationError("hanan controller requires gamma or a gamma rule factor G");
    }
  }
  return g;
}

SimTrace run_closed_loop(const SimConfig& cfg) {
  cfg.validate();
  const GainSet gains = effective_gains(cfg);
  const long n = cfg.steps();
  const double h = gains.h;

  SimTrace tr;
  tr.h = h;
  tr.reserve(static_cast<std::size_t>(n) + 1);

  double x1 = cfg.x1_0;
  ControllerState ctrl{cfg.nu_0};
  for (long k = 0;; ++k) {
    const double phi = phi_bar(cfg.signal, k, h);
    if (diverged(x1, ctrl.nu + phi)) throw DivergedError(k, std::move(tr));
    const double delta = delta_bar(cfg.signal, k, h);
    const ControlOutput out = controller_step(cfg.variant, ctrl, x1, gains);
    push_row(tr, static_cast<double>(k) * h, x1, phi, ctrl.nu, out.u, delta);
    if (k == n) break;
    x1 = x1 + h * out.u + h * phi;
    ctrl = out.next;
  }
  return tr;
}

std::optional<double> convergence_time(const SimTrace& trace, double ratio) {
  if (trace.empty()) throw UndefinedMetricError("convergence time of an empty trace");
  const double x0 = trace.x1.front();
  if (x0 == 0.0) throw UndefinedMetricError("convergence time undefined for x1(0) = 0");
  const double threshold = ratio * std::abs(x0);
  const std::size_t n = trace.size();
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(trace.x1[i]) > threshold) {
      if (i + 1 == n) return std::nullopt;
      return trace.t[i + 1];
    }
  }
  return trace.t.front();
}

double steady_state_error(const SimTrace& trace, double tail_start) {
  double worst = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.t[i] >= tail_start) {
      worst = std::max(worst, std::abs(trace.x1[i]));
      any = true;
    }
  }
  if (!any) throw UndefinedMetricError("steady-state tail is empty");
  return worst;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::H: return "h";
  }
  return "unknown";
}

std::string_view to_string(SweepMetric metric) {
  return metric == SweepMetric::ConvergenceTime ? "t_C" : "e_f";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::Alpha, SweepAxis::Beta, SweepAxis::Lambda, SweepAxis::H}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigurationError("unknown sweep axis '" + std::string(name) + "'");
}

SweepMetric parse_sweep_metric(std::string_view name) {
  if (name == "t_C" || name == "tc") return SweepMetric::ConvergenceTime;
  if (name == "e_f" || name == "ef") return SweepMetric::SteadyStateError;
  throw ConfigurationError("unknown sweep metric '" + std::string(name) + "'");
}

SimConfig apply_axis(const SimConfig& base, SweepAxis axis, double value) {
  SimConfig cfg = base;
  switch (axis) {
    case SweepAxis::Alpha: cfg.gains.alpha = value; break;
    case SweepAxis::Beta: cfg.gains.beta = value; break;
    case SweepAxis::H: cfg.gains.h = value; break;
    case SweepAxis::Lambda:
      cfg.gains.alpha = 1.5 * std::sqrt(value);
      cfg.gains.beta = 1.1 * value;
      if (cfg.variant == ControllerVariant::Hanan && !cfg.hanan_G) cfg.hanan_G = kDefaultHananG;
      break;
  }
  return cfg;
}

std::vector<double> linspace(double first, double last, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = first;
    return v;
  }
  const double span = last - first;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = first + span * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v.back() = last;
  return v;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("STCLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepTable sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values,
                 SweepMetric metric, const SweepOptions& options) {
  if (values.empty()) throw ConfigurationError("sweep needs at least one axis value");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw ConfigurationError("sweep axis values must be strictly increasing");
    }
  }
  if (metric == SweepMetric::ConvergenceTime && base.x1_0 == 0.0) {
    throw UndefinedMetricError("convergence time sweep needs x1(0) != 0");
  }

  SweepTable table;
  table.axis_name = std::string(to_string(axis));
  table.variant = base.variant;
  table.metric = metric;
  table.axis_values = values;
  table.metric_values.assign(values.size(), std::nullopt);

  auto evaluate = [&](std::size_t i) -> std::optional<double> {
    const SimConfig cfg = apply_axis(base, axis, values[i]);
    try {
      const SimTrace tr = run_closed_loop(cfg);
      if (metric == SweepMetric::ConvergenceTime) return convergence_time(tr, options.tc_ratio);
      return steady_state_error(tr, options.tail_start);
    } catch (const DivergedError&) {
      return std::nullopt;
    }
  };

  const unsigned threads = std::min<std::size_t>(
      options.threads ? options.threads : default_thread_count(), values.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) table.metric_values[i] = evaluate(i);
    return table;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < values.size(); i = next++) {
        try {
          table.metric_values[i] = evaluate(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return table;
}

SimTrace continuous_reference(const GainSet& gains, const DisturbanceSignal& signal,
                              VirtualState x0, double fine_h, double horizon,
                              long record_every) {
  gains.validate();
  signal.validate();
  if (!(fine_h > 0.0)) throw ParameterError("fine_h must be positive");
  if (record_every < 1) throw ParameterError("record_every must be at least 1");
  if (!(horizon >= fine_h)) throw ConfigurationError("reference horizon shorter than fine_h");
  const long n = floor_ratio(horizon, fine_h);

  SimTrace tr;
  tr.h = fine_h * static_cast<double>(record_every);
  tr.reserve(static_cast<std::size_t>(n / record_every) + 2);

  double x1 = x0.x1;
  double x2 = x0.x2;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * fine_h;
    if (diverged(x1, x2)) throw DivergedError(k, std::move(tr));
    if (k % record_every == 0) {
      const double phi = phi_of_t(signal, t);
      const double nu = x2 - phi;
      push_row(tr, t, x1, phi, nu, -gains.alpha * sgnpow(x1, 0.5) + nu, delta_of_t(signal, t));
    }
    if (k == n) break;
    const double dx1 = -gains.alpha * sgnpow(x1, 0.5) + x2;
    const double dx2 = -gains.beta * sign(x1) + delta_of_t(signal, t);
    x1 += fine_h * dx1;
    x2 += fine_h * dx2;
  }
  return tr;
}

double max_norm_deviation(const SimTrace& coarse, const SimTrace& reference) {
  if (coarse.empty() || reference.empty()) throw UndefinedMetricError("deviation of an empty trace");
  const double end = reference.t.back();
  double worst = 0.0;
  for (std::size_t i = 0; i < coarse.size() && coarse.t[i] <= end * (1.0 + 1e-12); ++i) {
    const double pos = coarse.t[i] / reference.h;
    const auto j = static_cast<std::size_t>(std::llround(pos));
    if (j >= reference.size() || std::abs(reference.t[j] - coarse.t[i]) > 1e-9 * std::max(1.0, end)) {
      throw DomainError("reference grid does not contain t = " + std::to_string(coarse.t[i]));
    }
    worst = std::max({worst, std::abs(coarse.x1[i] - reference.x1[j]),
                      std::abs(coarse.x2[i] - reference.x2[j])});
  }
  return worst;
}

double phase_plane_deviation(const SimTrace& coarse, const SimTrace& reference) {
  if (coarse.empty() || reference.empty()) throw UndefinedMetricError("deviation of an empty trace");
  const double end = coarse.t.back() * (1.0 + 1e-12);
  std::size_t m = 0;
  while (m < reference.size() && reference.t[m] <= end) ++m;
  double worst = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m && nearest > worst; ++j) {
      nearest = std::min(nearest, std::max(std::abs(coarse.x1[i] - reference.x1[j]),
                                           std::abs(coarse.x2[i] - reference.x2[j])));
    }
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace stclab
