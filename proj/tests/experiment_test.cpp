#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "stclab/csv.hpp"
#include "stclab/experiment.hpp"

using namespace stclab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stclab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, UnknownTokensNamed) {
  using nlohmann::json;
  EXPECT_NE(message_of([] { parse_experiment("sim-bogus"); }).find("sim-bogus"), std::string::npos);
  EXPECT_NE(message_of([] { config_from_json(Experiment::SimDisturbed, json{{"variants", {"Pid"}}}); })
                .find("Pid"),
            std::string::npos);
  EXPECT_NE(message_of([] { config_from_json(Experiment::SimDisturbed, json{{"signal", "square"}}); })
                .find("square"),
            std::string::npos);
  EXPECT_NE(message_of([] { config_from_json(Experiment::SimDisturbed, json{{"colour", 1}}); })
                .find("colour"),
            std::string::npos);
  EXPECT_NE(message_of([] {
              config_from_json(Experiment::SweepTc, json{{"sweep", {{"axis", "gamma"}}}});
            }).find("gamma"),
            std::string::npos);
  EXPECT_THROW(config_from_json(Experiment::SimDisturbed, json{{"experiment", "verify"}}),
               ConfigurationError);
}

TEST(Config, DefaultsMirrorPublishedSettings) {
  const ExperimentConfig c = default_config(Experiment::SimDisturbed);
  EXPECT_EQ(c.signal, "step");
  EXPECT_EQ(c.gains.beta, 10.0);
  EXPECT_EQ(c.gains.h, 0.01);
  EXPECT_EQ(c.gains.alpha, std::sqrt(10.0));
  EXPECT_EQ(c.x1_0, 1.0);
  EXPECT_EQ(c.horizon, 20.0);
  EXPECT_EQ(c.variants.size(), kAllVariants.size());

  const ExperimentConfig f = default_config(Experiment::PlotFunctions);
  EXPECT_EQ(f.gains.h, 1.0);
  EXPECT_EQ(f.gains.alpha, std::sqrt(2.0));

  const ExperimentConfig j = config_from_json(
      Experiment::SweepAccuracy, {{"gains", {{"alpha", 3.0}}}, {"sweep", {{"count", 7}}}});
  EXPECT_EQ(j.gains.alpha, 3.0);
  EXPECT_EQ(j.gains.h, 0.05);
  EXPECT_EQ(j.sweep.count, 7u);
}

TEST(PlotFunctions, DefaultCsvs) {
  ExperimentConfig cfg = default_config(Experiment::PlotFunctions);
  cfg.out_dir = scratch("plot");
  cmd_plot_functions(cfg);
  const auto psi1 = read_csv(cfg.out_dir / "psi1.csv");
  const auto psi2 = read_csv(cfg.out_dir / "psi2.csv");
  ASSERT_EQ(psi2.size(), 2002u);
  EXPECT_EQ(psi1[0][0], "x1");
  EXPECT_EQ(psi1[0][1], "continuous");
  const std::size_t p = column(psi2[0], "proposed");
  const std::size_t b = column(psi2[0], "brogliato");
  const std::size_t x = column(psi2[0], "xiong");
  const std::size_t k = column(psi1[0], "koch");
  for (std::size_t r = 1; r < psi2.size(); ++r) {
    EXPECT_EQ(psi2[r][p], psi2[r][b]) << r;
    EXPECT_EQ(psi2[r][p], psi2[r][x]) << r;
    EXPECT_TRUE(std::isfinite(std::stod(psi1[r][k]))) << r;
  }
  EXPECT_TRUE(fs::exists(cfg.out_dir / "summary.json"));
}

TEST(PlotFunctions, TinyGridCentreIsZero) {
  ExperimentConfig cfg = default_config(Experiment::PlotFunctions);
  cfg.out_dir = scratch("plot_tiny");
  cfg.plot = {-1e-9, 1e-9, 3};
  cmd_plot_functions(cfg);
  for (const char* f : {"psi1.csv", "psi2.csv"}) {
    const auto rows = read_csv(cfg.out_dir / f);
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t c = 0; c < rows[2].size(); ++c) EXPECT_EQ(std::stod(rows[2][c]), 0.0) << f << c;
  }
}

TEST(Sim, DisturbedStepSummaries) {
  ExperimentConfig cfg = default_config(Experiment::SimDisturbed);
  cfg.out_dir = scratch("sim_step");
  cfg.variants = {ControllerVariant::Proposed, ControllerVariant::Brogliato};
  const SimResult r = cmd_sim(cfg);
  ASSERT_EQ(r.summaries.size(), 2u);
  const double bound = cfg.gains.h * cfg.gains.h * 1.0;
  ASSERT_TRUE(r.summaries[0].e_f);
  ASSERT_TRUE(r.summaries[1].e_f);
  // After the step the proposed tail sits exactly on h^2 L.
  EXPECT_LE(*r.summaries[0].e_f, bound + 1e-12);
  EXPECT_GT(*r.summaries[1].e_f, 10.0 * bound);

  const auto trace = read_csv(cfg.out_dir / "trace_proposed.csv");
  EXPECT_EQ(trace[0], (std::vector<std::string>{"t", "x1", "x2", "u", "nu", "delta_bar"}));
  EXPECT_EQ(trace.size(), 2002u);
  const auto summary = read_csv(cfg.out_dir / "summary.csv");
  ASSERT_EQ(summary.size(), 3u);
  EXPECT_EQ(summary[1][0], "proposed");
  EXPECT_EQ(std::stod(summary[1][2]), *r.summaries[0].e_f);
}

TEST(Sim, UndisturbedContrast) {
  ExperimentConfig cfg = default_config(Experiment::SimUndisturbed);
  cfg.out_dir = scratch("sim_zero");
  const SimResult r = cmd_sim(cfg);
  for (const auto& s : r.summaries) {
    ASSERT_TRUE(s.e_f) << to_string(s.variant);
    if (s.variant == ControllerVariant::Explicit) {
      EXPECT_GT(*s.e_f, 0.0);
    } else {
      EXPECT_LE(*s.e_f, 1e-12) << to_string(s.variant);
    }
  }
}

TEST(Sim, HorizonShorterThanStepRejected) {
  ExperimentConfig cfg = default_config(Experiment::SimDisturbed);
  cfg.out_dir = scratch("sim_short");
  cfg.horizon = 0.005;
  EXPECT_THROW(cmd_sim(cfg), ConfigurationError);
  std::ostringstream log;
  EXPECT_EQ(run_experiment(cfg, log), kExitConfig);
}

TEST(Sweep, SinglePointMatchesSim) {
  ExperimentConfig cfg = default_config(Experiment::SweepTc);
  cfg.out_dir = scratch("sweep_one");
  cfg.variants = {ControllerVariant::Xiong, ControllerVariant::Proposed};
  cfg.sweep.start = cfg.sweep.stop = 29.8;
  cfg.sweep.count = 1;
  const SweepResult sw = cmd_sweep(cfg);
  const auto rows = read_csv(cfg.out_dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "xiong", "proposed"}));

  ExperimentConfig sim = default_config(Experiment::SimUndisturbed);
  sim.out_dir = scratch("sweep_one_sim");
  sim.variants = cfg.variants;
  sim.gains.alpha = 29.8;
  const SimResult r = cmd_sim(sim);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_TRUE(sw.tables[i].metric_values[0]);
    ASSERT_TRUE(r.summaries[i].t_C);
    EXPECT_EQ(*sw.tables[i].metric_values[0], *r.summaries[i].t_C);
  }
}

TEST(Trajectories, ZeroStateStaysZero) {
  ExperimentConfig cfg = default_config(Experiment::Trajectories);
  cfg.out_dir = scratch("traj_zero");
  cfg.x1_0 = 0.0;
  cfg.horizon = 0.5;
  const TrajectoryResult r = cmd_trajectories(cfg);
  for (double d : r.phase_deviation) EXPECT_EQ(d, 0.0);
  for (double d : r.time_deviation) EXPECT_EQ(d, 0.0);
  const auto rows = read_csv(cfg.out_dir / "trajectories.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(std::stod(rows[i][2]), 0.0);
    EXPECT_EQ(std::stod(rows[i][3]), 0.0);
  }
}

TEST(Trajectories, DeviationGrowsWithStep) {
  ExperimentConfig cfg = default_config(Experiment::Trajectories);
  cfg.out_dir = scratch("traj");
  cfg.trajectories.fine_h = 1e-4;
  const TrajectoryResult r = cmd_trajectories(cfg);
  ASSERT_EQ(r.phase_deviation.size(), 3u);
  EXPECT_LT(r.phase_deviation[0], 0.05);
  EXPECT_LT(r.phase_deviation[0], r.phase_deviation[1]);
  EXPECT_LT(r.phase_deviation[1], r.phase_deviation[2]);
  const auto rows = read_csv(cfg.out_dir / "trajectories_summary.csv");
  EXPECT_EQ(rows[0], (std::vector<std::string>{"h", "phase_plane_deviation", "time_aligned_deviation"}));
}

TEST(Verify, DefaultsPassAndRerunsAreByteIdentical) {
  ExperimentConfig cfg = default_config(Experiment::Verify);
  cfg.verify.samples = 20000;
  cfg.verify.invariance_states = 500;
  cfg.verify.deadbeat_trials = 500;
  cfg.out_dir = scratch("verify_a");
  std::ostringstream log;
  EXPECT_EQ(run_experiment(cfg, log), kExitOk) << log.str();
  const std::string first = slurp(cfg.out_dir / "verify_report.csv");
  cfg.out_dir = scratch("verify_b");
  EXPECT_EQ(run_experiment(cfg, log), kExitOk);
  EXPECT_EQ(first, slurp(cfg.out_dir / "verify_report.csv"));
  EXPECT_NE(first.find("passed,true"), std::string::npos);
}

TEST(Verify, BetaBelowBoundIsParameterError) {
  ExperimentConfig cfg = default_config(Experiment::Verify);
  cfg.out_dir = scratch("verify_bad");
  cfg.verify.L = 1.0;
  cfg.verify.V_budget = 1.0;
  EXPECT_THROW(cmd_verify(cfg), ParameterError);
  std::ostringstream log;
  EXPECT_EQ(run_experiment(cfg, log), kExitConfig);
  EXPECT_NE(log.str().find("violated"), std::string::npos) << log.str();
}

TEST(Csv, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(CsvWriter(fs::path("/proc/stclab/nope.csv"), {"a"}), IoError);
}

#ifdef STCLAB_CLI_PATH
#include <sys/wait.h>

namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(STCLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("plot-functions --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "psi1.csv"));
  EXPECT_EQ(run_cli("sim-disturbed --variant Nope --out " + out.string()), 2);
  EXPECT_EQ(run_cli("sim-disturbed --bogus-flag"), 2);
  EXPECT_EQ(run_cli("no-such-subcommand"), 2);
  EXPECT_EQ(run_cli("sim-disturbed --config " + (out / "missing.json").string()), 2);

  // A regular file where the output directory should be.
  const fs::path blocker = scratch("cli_blocker");
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run_cli("plot-functions --out " + (blocker / "sub").string()), 3);

  const fs::path cfg = out / "cfg.json";
  std::ofstream(cfg) << R"({"variants": ["proposed"], "horizon": 1.0, "tail_start": 0.5})";
  EXPECT_EQ(run_cli("sim-undisturbed --config " + cfg.string() + " --out " + (out / "s").string()), 0);
  EXPECT_TRUE(fs::exists(out / "s" / "trace_proposed.csv"));
  EXPECT_FALSE(fs::exists(out / "s" / "trace_koch.csv"));
}
#endif
