#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stclab/controllers.hpp"
#include "stclab/simulator.hpp"
#include "stclab/verification.hpp"

namespace stclab {

enum class Experiment {
  PlotFunctions,
  SimDisturbed,
  SimUndisturbed,
  SweepTc,
  SweepAccuracy,
  Trajectories,
  Verify
};

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view name);

/// Process exit codes of the command-line runner.
enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfig = 2, kExitIo = 3 };

struct PlotGrid {
  double x_min = -4.0;
  double x_max = 4.0;
  std::size_t points = 2001;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::Alpha;
  SweepMetric metric = SweepMetric::ConvergenceTime;
  double start = 1.0;
  double stop = 100.0;
  std::size_t count = 991;
};

struct TrajectorySpec {
  std::vector<double> h_list{0.01, 0.05, 0.1};
  double fine_h = 1e-5;
  double record_dt = 1e-3;  // spacing of the reference rows written to disk
};

struct VerifySpec {
  double L = 0.0;
  double V_budget = 50.0;
  std::uint64_t samples = 100000;
  std::optional<double> invariance_L;  // defaults to beta / 2
  std::uint64_t invariance_states = 10000;
  std::uint64_t invariance_steps = 100;
  std::uint64_t deadbeat_trials = 10000;
};

/// Everything one subcommand needs. Defaults reproduce the published
/// simulation settings for the chosen experiment.
struct ExperimentConfig {
  Experiment experiment = Experiment::SimDisturbed;
  std::vector<ControllerVariant> variants;
  GainSet gains;
  double hanan_G = kDefaultHananG;
  std::string signal = "step";
  double x1_0 = 1.0;
  double x2_0 = 0.0;
  double nu_0 = 0.0;
  double horizon = 20.0;
  double tail_start = 15.0;
  double tc_ratio = 0.01;
  PlotGrid plot;
  SweepSpec sweep;
  TrajectorySpec trajectories;
  VerifySpec verify;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

ExperimentConfig default_config(Experiment e);

/// Applies a JSON document on top of the experiment defaults. Unknown keys,
/// experiments, variants, signals, axes and metrics raise ConfigurationError
/// naming the offending token.
ExperimentConfig config_from_json(Experiment e, const nlohmann::json& doc);

/// Builds the per-variant simulation config (gains, signal, initial state).
SimConfig sim_config_for(const ExperimentConfig& cfg, ControllerVariant v);

struct VariantSummary {
  ControllerVariant variant = ControllerVariant::Proposed;
  std::optional<double> t_C;
  std::optional<double> e_f;
  std::optional<long> diverged_at;
};

struct SimResult {
  std::vector<VariantSummary> summaries;
};

struct SweepResult {
  std::vector<SweepTable> tables;
};

struct TrajectoryResult {
  std::vector<double> h_list;
  std::vector<double> phase_deviation;  // phase_plane_deviation per h
  std::vector<double> time_deviation;   // max_norm_deviation per h
};

struct VerifyResult {
  LyapunovReport lyapunov;
  DeadbeatReport deadbeat;
  InvarianceReport invariance;
  double invariance_L = 0.0;
  bool passed() const;
};

// Each command writes its CSV/JSON files into cfg.out_dir.
void cmd_plot_functions(const ExperimentConfig& cfg);
SimResult cmd_sim(const ExperimentConfig& cfg);
SweepResult cmd_sweep(const ExperimentConfig& cfg);
TrajectoryResult cmd_trajectories(const ExperimentConfig& cfg);
VerifyResult cmd_verify(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment, reports on `log`, maps failures to
/// ExitCode values.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace stclab
