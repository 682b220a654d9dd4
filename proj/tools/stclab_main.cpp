// stclab: command-line runner for the discrete super-twisting experiments.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stclab/experiment.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> variants;
  std::optional<std::string> signal;
  std::optional<double> alpha, beta, h, gamma, x1_0, x2_0, horizon, tail_start;
  std::optional<std::string> axis, metric;
  std::optional<double> start, stop;
  std::optional<std::size_t> count;
  std::optional<double> L, V_budget;
  std::optional<std::uint64_t> samples;
};

stclab::ExperimentConfig build_config(stclab::Experiment e, const Overrides& o) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw stclab::ConfigurationError("cannot read config file " + o.config_path);
    doc = nlohmann::json::parse(in);
  }
  stclab::ExperimentConfig cfg = stclab::config_from_json(e, doc);

  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : o.variants) cfg.variants.push_back(stclab::parse_variant(v));
  }
  if (o.signal) {
    (void)stclab::signal_by_name(*o.signal);
    cfg.signal = *o.signal;
  }
  if (o.alpha) cfg.gains.alpha = *o.alpha;
  if (o.beta) cfg.gains.beta = *o.beta;
  if (o.h) cfg.gains.h = *o.h;
  if (o.gamma) cfg.gains.gamma = *o.gamma;
  if (o.x1_0) cfg.x1_0 = *o.x1_0;
  if (o.x2_0) cfg.x2_0 = *o.x2_0;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.tail_start) cfg.tail_start = *o.tail_start;
  if (o.axis) cfg.sweep.axis = stclab::parse_sweep_axis(*o.axis);
  if (o.metric) cfg.sweep.metric = stclab::parse_sweep_metric(*o.metric);
  if (o.start) cfg.sweep.start = *o.start;
  if (o.stop) cfg.sweep.stop = *o.stop;
  if (o.count) cfg.sweep.count = *o.count;
  if (o.L) cfg.verify.L = *o.L;
  if (o.V_budget) cfg.verify.V_budget = *o.V_budget;
  if (o.samples) cfg.verify.samples = *o.samples;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time super-twisting controller laboratory"};
  app.require_subcommand(1);
  // "-h" is taken by the discretization time; subcommands inherit this.
  app.set_help_flag("--help", "print this help and exit");

  Overrides o;
  std::optional<stclab::Experiment> chosen;
  for (auto e : {stclab::Experiment::PlotFunctions, stclab::Experiment::SimDisturbed,
                 stclab::Experiment::SimUndisturbed, stclab::Experiment::SweepTc,
                 stclab::Experiment::SweepAccuracy, stclab::Experiment::Trajectories,
                 stclab::Experiment::Verify}) {
    auto* sub = app.add_subcommand(std::string(stclab::to_string(e)));
    sub->callback([&chosen, e] { chosen = e; });
    sub->add_option("--config", o.config_path, "JSON config file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--variant", o.variants, "controller variant (repeatable)");
    sub->add_option("--signal", o.signal, "disturbance: zero, step, sin, sin-offset5");
    sub->add_option("--alpha", o.alpha);
    sub->add_option("--beta", o.beta);
    sub->add_option("--h", o.h, "discretization time");
    sub->add_option("--gamma", o.gamma, "fixed low-chattering gamma");
    sub->add_option("--x1-0", o.x1_0, "initial x1");
    sub->add_option("--x2-0", o.x2_0, "initial x2 (trajectories)");
    sub->add_option("--horizon", o.horizon, "simulated time in seconds");
    sub->add_option("--tail-start", o.tail_start, "start of the steady-state window");
    sub->add_option("--axis", o.axis, "sweep axis: alpha, beta, lambda, h");
    sub->add_option("--metric", o.metric, "sweep metric: t_C, e_f");
    sub->add_option("--start", o.start, "first sweep value");
    sub->add_option("--stop", o.stop, "last sweep value");
    sub->add_option("--count", o.count, "number of sweep points");
    sub->add_option("--L", o.L, "disturbance bound for verify");
    sub->add_option("--V-budget", o.V_budget, "Lyapunov level set for verify");
    sub->add_option("--samples", o.samples, "decrease-audit samples for verify");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? stclab::kExitOk : stclab::kExitConfig;
  }

  stclab::ExperimentConfig cfg;
  try {
    cfg = build_config(*chosen, o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return stclab::kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return stclab::kExitConfig;
  }
  return stclab::run_experiment(cfg, std::cerr);
}
