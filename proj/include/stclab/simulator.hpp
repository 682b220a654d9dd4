#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stclab/controllers.hpp"
#include "stclab/core.hpp"
#include "stclab/disturbances.hpp"

namespace stclab {

/// States beyond this magnitude abort a run.
inline constexpr double kDivergenceLimit = 1e12;

struct SimConfig {
  ControllerVariant variant = ControllerVariant::Proposed;
  GainSet gains;
  DisturbanceSignal signal;
  double x1_0 = 0.0;
  double nu_0 = 0.0;
  double horizon_T = 0.0;
  // When set, the low-chattering gamma is recomputed from (alpha, beta) with
  // this G whenever the gains change (sweeps). Otherwise gains.gamma is used.
  std::optional<double> hanan_G;

  /// Number of plant steps, floor(horizon_T / h). Throws ConfigurationError
  /// if it is below one.
  long steps() const;
  void validate() const;
};

/// One row per sample k. The last row carries the controller output at the
/// final state, which is never applied to the plant.
struct SimTrace {
  double h = 0.0;
  std::vector<double> t;
  std::vector<double> x1;
  std::vector<double> phi_bar;
  std::vector<double> nu;
  std::vector<double> x2;
  std::vector<double> u;
  std::vector<double> delta_bar;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  void reserve(std::size_t n);
};

class DivergedError : public std::runtime_error {
 public:
  DivergedError(long step, SimTrace partial);
  long step() const noexcept { return step_; }
  const SimTrace& partial_trace() const noexcept { return partial_; }

 private:
  long step_;
  SimTrace partial_;
};

/// Returns gains with gamma filled in for the low-chattering variant when the
/// config asks for the rule.
GainSet effective_gains(const SimConfig& cfg);

/// Closed-loop run of the exactly discretized plant
///   x1+ = x1 + h u + h phi_bar_k
/// under the configured controller. Deterministic.
SimTrace run_closed_loop(const SimConfig& cfg);

/// Smallest grid time after which |x1| <= ratio |x1(0)| holds until the end
/// of the trace; nullopt if the last sample still exceeds the threshold.
std::optional<double> convergence_time(const SimTrace& trace, double ratio = 0.01);

/// max |x1| over samples with t >= tail_start.
double steady_state_error(const SimTrace& trace, double tail_start);

enum class SweepAxis { Alpha, Beta, Lambda, H };
enum class SweepMetric { ConvergenceTime, SteadyStateError };

std::string_view to_string(SweepAxis axis);
std::string_view to_string(SweepMetric metric);
SweepAxis parse_sweep_axis(std::string_view name);
SweepMetric parse_sweep_metric(std::string_view name);

struct SweepTable {
  std::string axis_name;
  ControllerVariant variant = ControllerVariant::Proposed;
  SweepMetric metric = SweepMetric::ConvergenceTime;
  std::vector<double> axis_values;
  std::vector<std::optional<double>> metric_values;  // nullopt: diverged or undefined
};

struct SweepOptions {
  double tc_ratio = 0.01;
  double tail_start = 15.0;
  // 0 means: STCLAB_THREADS if set, else hardware concurrency.
  unsigned threads = 0;
};

/// Applies one axis value to a base config. The lambda axis sets
/// alpha = 1.5 sqrt(lambda), beta = 1.1 lambda.
SimConfig apply_axis(const SimConfig& base, SweepAxis axis, double value);

/// Evaluates the metric at every axis value. Values must be strictly
/// increasing. Points are independent and may run concurrently; the merge is
/// by axis index.
SweepTable sweep(const SimConfig& base, SweepAxis axis, const std::vector<double>& values,
                 SweepMetric metric, const SweepOptions& options = {});

/// n uniformly spaced values from first to last inclusive.
std::vector<double> linspace(double first, double last, std::size_t n);

/// Sweep parallelism: STCLAB_THREADS if set and positive, else hardware
/// concurrency (at least 1).
unsigned default_thread_count();

/// Forward-Euler integration of the continuous super-twisting loop
///   x1' = -alpha sgnpow(x1, 1/2) + x2,  x2' = -beta sign(x1) + Delta(t)
/// with step fine_h. Every record_every-th sample is stored; the stored
/// trace has h = fine_h * record_every.
SimTrace continuous_reference(const GainSet& gains, const DisturbanceSignal& signal,
                              VirtualState x0, double fine_h, double horizon,
                              long record_every = 1);

/// Largest max(|dx1|, |dx2|) between a coarse trace and a finer reference,
/// compared at the coarse sample times up to the shorter horizon. The
/// reference grid must contain every coarse sample time.
double max_norm_deviation(const SimTrace& coarse, const SimTrace& reference);

/// Largest distance, in the max norm of the (x1, x2) plane, from a coarse
/// state to the nearest reference state. Compares the trajectories as curves,
/// so a shifted finite convergence instant does not count against the coarse
/// run. Reference states beyond the coarse horizon are ignored.
double phase_plane_deviation(const SimTrace& coarse, const SimTrace& reference);

}  // namespace stclab
