#include "stclab/experiment.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "stclab/csv.hpp"
#include "stclab/disturbances.hpp"

namespace stclab {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 7> kExperimentNames = {{
    {Experiment::PlotFunctions, "plot-functions"},
    {Experiment::SimDisturbed, "sim-disturbed"},
    {Experiment::SimUndisturbed, "sim-undisturbed"},
    {Experiment::SweepTc, "sweep-tc"},
    {Experiment::SweepAccuracy, "sweep-accuracy"},
    {Experiment::Trajectories, "trajectories"},
    {Experiment::Verify, "verify"},
}};

std::vector<ControllerVariant> all_variants() {
  return {kAllVariants.begin(), kAllVariants.end()};
}

void reject_unknown_keys(const json& obj, std::string_view where,
                         std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) {
    throw ConfigurationError(std::string(where) + " must be a JSON object");
  }
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigurationError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& obj, const char* key, T& into) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json gains_json(const ExperimentConfig& cfg) {
  json g = {{"alpha", cfg.gains.alpha}, {"beta", cfg.gains.beta}, {"h", cfg.gains.h},
            {"hanan_G", cfg.hanan_G}};
  g["gamma"] = cfg.gains.gamma ? json(*cfg.gains.gamma) : json(nullptr);
  return g;
}

std::vector<std::string> variant_header(std::string first, const std::vector<ControllerVariant>& vs) {
  std::vector<std::string> header{std::move(first)};
  for (auto v : vs) header.emplace_back(to_string(v));
  return header;
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return name;
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  throw ConfigurationError("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  cfg.variants = all_variants();
  cfg.gains.alpha = std::sqrt(10.0);
  cfg.gains.beta = 10.0;
  cfg.gains.h = 0.01;
  switch (e) {
    case Experiment::PlotFunctions:
      cfg.gains.h = 1.0;
      cfg.gains.beta = 1.0;
      cfg.gains.alpha = std::sqrt(2.0);
      cfg.signal = "zero";
      break;
    case Experiment::SimDisturbed:
      cfg.signal = "step";
      break;
    case Experiment::SimUndisturbed:
      cfg.signal = "zero";
      break;
    case Experiment::SweepTc:
      cfg.signal = "zero";
      cfg.sweep = {SweepAxis::Alpha, SweepMetric::ConvergenceTime, 1.0, 100.0, 991};
      break;
    case Experiment::SweepAccuracy:
      cfg.signal = "sin";
      cfg.gains.alpha = 10.0;
      cfg.gains.h = 0.05;
      cfg.x1_0 = 0.0;
      cfg.sweep = {SweepAxis::Lambda, SweepMetric::SteadyStateError, 1.0, 40.0, 1000};
      break;
    case Experiment::Trajectories:
      cfg.signal = "zero";
      cfg.variants = {ControllerVariant::Proposed};
      cfg.horizon = 5.0;
      break;
    case Experiment::Verify:
      cfg.signal = "zero";
      cfg.variants = {ControllerVariant::Proposed};
      break;
  }
  return cfg;
}

ExperimentConfig config_from_json(Experiment e, const json& doc) {
  ExperimentConfig cfg = default_config(e);
  reject_unknown_keys(doc, "config",
                      {"experiment", "variants", "gains", "signal", "x1_0", "x2_0", "nu_0",
                       "horizon", "tail_start", "tc_ratio", "plot", "sweep", "trajectories",
                       "verify", "out", "seed", "threads"});
  if (doc.contains("experiment")) {
    const Experiment named = parse_experiment(doc.at("experiment").get<std::string>());
    if (named != e) {
      throw ConfigurationError("config names experiment '" + std::string(to_string(named)) +
                               "' but subcommand is '" + std::string(to_string(e)) + "'");
    }
  }
  if (doc.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : doc.at("variants")) cfg.variants.push_back(parse_variant(v.get<std::string>()));
  }
  if (doc.contains("gains")) {
    const json& g = doc.at("gains");
    reject_unknown_keys(g, "gains", {"alpha", "beta", "h", "gamma", "hanan_G"});
    read(g, "alpha", cfg.gains.alpha);
    read(g, "beta", cfg.gains.beta);
    read(g, "h", cfg.gains.h);
    read(g, "hanan_G", cfg.hanan_G);
    if (g.contains("gamma") && !g.at("gamma").is_null()) cfg.gains.gamma = g.at("gamma").get<double>();
  }
  if (doc.contains("signal")) {
    cfg.signal = doc.at("signal").get<std::string>();
    (void)signal_by_name(cfg.signal);
  }
  read(doc, "x1_0", cfg.x1_0);
  read(doc, "x2_0", cfg.x2_0);
  read(doc, "nu_0", cfg.nu_0);
  read(doc, "horizon", cfg.horizon);
  read(doc, "tail_start", cfg.tail_start);
  read(doc, "tc_ratio", cfg.tc_ratio);
  if (doc.contains("plot")) {
    const json& p = doc.at("plot");
    reject_unknown_keys(p, "plot", {"x_min", "x_max", "points"});
    read(p, "x_min", cfg.plot.x_min);
    read(p, "x_max", cfg.plot.x_max);
    read(p, "points", cfg.plot.points);
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    reject_unknown_keys(s, "sweep", {"axis", "metric", "start", "stop", "count"});
    if (s.contains("axis")) cfg.sweep.axis = parse_sweep_axis(s.at("axis").get<std::string>());
    if (s.contains("metric")) cfg.sweep.metric = parse_sweep_metric(s.at("metric").get<std::string>());
    read(s, "start", cfg.sweep.start);
    read(s, "stop", cfg.sweep.stop);
    read(s, "count", cfg.sweep.count);
  }
  if (doc.contains("trajectories")) {
    const json& t = doc.at("trajectories");
    reject_unknown_keys(t, "trajectories", {"h_list", "fine_h", "record_dt"});
    read(t, "h_list", cfg.trajectories.h_list);
    read(t, "fine_h", cfg.trajectories.fine_h);
    read(t, "record_dt", cfg.trajectories.record_dt);
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    reject_unknown_keys(v, "verify",
                        {"L", "V_budget", "samples", "invariance_L", "invariance_states",
                         "invariance_steps", "deadbeat_trials"});
    read(v, "L", cfg.verify.L);
    read(v, "V_budget", cfg.verify.V_budget);
    read(v, "samples", cfg.verify.samples);
    if (v.contains("invariance_L") && !v.at("invariance_L").is_null()) {
      cfg.verify.invariance_L = v.at("invariance_L").get<double>();
    }
    read(v, "invariance_states", cfg.verify.invariance_states);
    read(v, "invariance_steps", cfg.verify.invariance_steps);
    read(v, "deadbeat_trials", cfg.verify.deadbeat_trials);
  }
  if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();
  read(doc, "seed", cfg.seed);
  read(doc, "threads", cfg.threads);
  return cfg;
}

SimConfig sim_config_for(const ExperimentConfig& cfg, ControllerVariant v) {
  SimConfig sc;
  sc.variant = v;
  sc.gains = cfg.gains;
  sc.signal = signal_by_name(cfg.signal);
  sc.gains.lipschitz_L = lipschitz_bound(sc.signal);
  sc.x1_0 = cfg.x1_0;
  sc.nu_0 = cfg.nu_0;
  sc.horizon_T = cfg.horizon;
  if (v == ControllerVariant::Hanan && !cfg.gains.gamma) sc.hanan_G = cfg.hanan_G;
  return sc;
}

void cmd_plot_functions(const ExperimentConfig& cfg) {
  if (cfg.plot.points < 1 || !(cfg.plot.x_max >= cfg.plot.x_min)) {
    throw ConfigurationError("plot grid needs points >= 1 and x_max >= x_min");
  }
  ensure_dir(cfg.out_dir);
  std::vector<GainSet> gains;
  for (auto v : cfg.variants) gains.push_back(effective_gains(sim_config_for(cfg, v)));

  auto header = variant_header("x1", cfg.variants);
  header.insert(header.begin() + 1, "continuous");
  CsvWriter psi1(cfg.out_dir / "psi1.csv", header);
  CsvWriter psi2(cfg.out_dir / "psi2.csv", header);
  const auto grid = linspace(cfg.plot.x_min, cfg.plot.x_max, cfg.plot.points);
  for (double x : grid) {
    std::vector<std::optional<double>> r1{x, sgnpow(x, 0.5)};
    std::vector<std::optional<double>> r2{x, sgnpow(x, 0.0)};
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
      const PsiPair p = psi_pair(cfg.variants[i], x, 0.0, gains[i]);
      r1.emplace_back(p.psi1);
      r2.emplace_back(p.psi2);
    }
    psi1.row(r1);
    psi2.row(r2);
  }
  psi1.close();
  psi2.close();
  write_json(cfg.out_dir / "summary.json",
             {{"experiment", to_string(cfg.experiment)}, {"gains", gains_json(cfg)},
              {"points", cfg.plot.points}, {"files", {"psi1.csv", "psi2.csv"}}});
}

SimResult cmd_sim(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  SimResult result;
  json variants = json::array();
  CsvWriter summary(cfg.out_dir / "summary.csv", {"variant", "t_C", "e_f", "diverged_step"});
  for (auto v : cfg.variants) {
    const SimConfig sc = sim_config_for(cfg, v);
    VariantSummary s;
    s.variant = v;
    SimTrace trace;
    try {
      trace = run_closed_loop(sc);
    } catch (const DivergedError& e) {
      trace = e.partial_trace();
      s.diverged_at = e.step();
    }
    if (!s.diverged_at && !trace.empty()) {
      if (cfg.x1_0 != 0.0) s.t_C = convergence_time(trace, cfg.tc_ratio);
      if (trace.t.back() >= cfg.tail_start) s.e_f = steady_state_error(trace, cfg.tail_start);
    }
    CsvWriter out(cfg.out_dir / ("trace_" + std::string(to_string(v)) + ".csv"),
                  {"t", "x1", "x2", "u", "nu", "delta_bar"});
    for (std::size_t i = 0; i < trace.size(); ++i) {
      out.row(std::vector<std::optional<double>>{trace.t[i], trace.x1[i], trace.x2[i], trace.u[i],
                                                 trace.nu[i], trace.delta_bar[i]});
    }
    out.close();
    summary.row(std::vector<std::string>{
        std::string(to_string(v)), s.t_C ? format_double(*s.t_C) : "",
        s.e_f ? format_double(*s.e_f) : "", s.diverged_at ? std::to_string(*s.diverged_at) : ""});
    variants.push_back({{"variant", to_string(v)},
                        {"t_C", optional_json(s.t_C)},
                        {"e_f", optional_json(s.e_f)},
                        {"diverged_step", s.diverged_at ? json(*s.diverged_at) : json(nullptr)}});
    result.summaries.push_back(s);
  }
  summary.close();
  const DisturbanceSignal signal = signal_by_name(cfg.signal);
  write_json(cfg.out_dir / "summary.json",
             {{"experiment", to_string(cfg.experiment)},
              {"gains", gains_json(cfg)},
              {"signal", cfg.signal},
              {"L", lipschitz_bound(signal)},
              {"x1_0", cfg.x1_0},
              {"horizon", cfg.horizon},
              {"tail_start", cfg.tail_start},
              {"variants", variants}});
  return result;
}

SweepResult cmd_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep.count < 1) throw ConfigurationError("sweep count must be at least 1");
  ensure_dir(cfg.out_dir);
  const auto values = linspace(cfg.sweep.start, cfg.sweep.stop, cfg.sweep.count);
  SweepOptions opts;
  opts.tc_ratio = cfg.tc_ratio;
  opts.tail_start = cfg.tail_start;
  opts.threads = cfg.threads;

  SweepResult result;
  for (auto v : cfg.variants) {
    result.tables.push_back(sweep(sim_config_for(cfg, v), cfg.sweep.axis, values, cfg.sweep.metric, opts));
  }

  CsvWriter out(cfg.out_dir / "sweep.csv", variant_header(std::string(to_string(cfg.sweep.axis)), cfg.variants));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<std::optional<double>> row{values[i]};
    for (const auto& t : result.tables) row.push_back(t.metric_values[i]);
    out.row(row);
  }
  out.close();
  write_json(cfg.out_dir / "summary.json",
             {{"experiment", to_string(cfg.experiment)},
              {"gains", gains_json(cfg)},
              {"signal", cfg.signal},
              {"axis", to_string(cfg.sweep.axis)},
              {"metric", to_string(cfg.sweep.metric)},
              {"start", cfg.sweep.start},
              {"stop", cfg.sweep.stop},
              {"count", cfg.sweep.count},
              {"file", "sweep.csv"}});
  return result;
}

TrajectoryResult cmd_trajectories(const ExperimentConfig& cfg) {
  const auto& spec = cfg.trajectories;
  if (spec.h_list.empty()) throw ConfigurationError("trajectories need at least one h");
  if (!(spec.fine_h > 0.0) || !(spec.record_dt >= spec.fine_h)) {
    throw ConfigurationError("trajectories need fine_h > 0 and record_dt >= fine_h");
  }
  ensure_dir(cfg.out_dir);
  const DisturbanceSignal signal = signal_by_name(cfg.signal);
  const SimTrace reference =
      continuous_reference(cfg.gains, signal, {cfg.x1_0, cfg.x2_0}, spec.fine_h, cfg.horizon);

  TrajectoryResult result;
  CsvWriter out(cfg.out_dir / "trajectories.csv", {"series", "t", "x1", "x2"});
  for (double h : spec.h_list) {
    ExperimentConfig one = cfg;
    one.gains.h = h;
    SimConfig sc = sim_config_for(one, ControllerVariant::Proposed);
    sc.nu_0 = cfg.x2_0 - phi_bar(signal, 0, h);
    const SimTrace trace = run_closed_loop(sc);
    result.h_list.push_back(h);
    result.phase_deviation.push_back(phase_plane_deviation(trace, reference));
    result.time_deviation.push_back(max_norm_deviation(trace, reference));
    const std::string name = "h=" + format_double(h);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      out.row(std::vector<std::string>{name, format_double(trace.t[i]), format_double(trace.x1[i]),
                                       format_double(trace.x2[i])});
    }
  }
  const auto stride = static_cast<std::size_t>(std::max(1LL, std::llround(spec.record_dt / spec.fine_h)));
  for (std::size_t i = 0; i < reference.size(); i += stride) {
    out.row(std::vector<std::string>{"reference", format_double(reference.t[i]),
                                     format_double(reference.x1[i]), format_double(reference.x2[i])});
  }
  out.close();

  CsvWriter dev(cfg.out_dir / "trajectories_summary.csv",
                {"h", "phase_plane_deviation", "time_aligned_deviation"});
  json rows = json::array();
  for (std::size_t i = 0; i < result.h_list.size(); ++i) {
    dev.row(std::vector<std::optional<double>>{result.h_list[i], result.phase_deviation[i],
                                               result.time_deviation[i]});
    rows.push_back({{"h", result.h_list[i]},
                    {"phase_plane_deviation", result.phase_deviation[i]},
                    {"time_aligned_deviation", result.time_deviation[i]}});
  }
  dev.close();
  write_json(cfg.out_dir / "summary.json",
             {{"experiment", to_string(cfg.experiment)},
              {"gains", gains_json(cfg)},
              {"signal", cfg.signal},
              {"x0", {cfg.x1_0, cfg.x2_0}},
              {"fine_h", spec.fine_h},
              {"horizon", cfg.horizon},
              {"deviation", rows}});
  return result;
}

bool VerifyResult::passed() const {
  return lyapunov.passed() && deadbeat.passed() && invariance.passed();
}

VerifyResult cmd_verify(const ExperimentConfig& cfg) {
  const auto& spec = cfg.verify;
  VerifyResult r;
  r.lyapunov = check_decrease(cfg.gains, spec.L, spec.V_budget, spec.samples, cfg.seed);
  r.deadbeat = deadbeat_check(cfg.gains, spec.deadbeat_trials, cfg.seed);
  r.invariance_L = spec.invariance_L.value_or(cfg.gains.beta / 2.0);
  r.invariance = forward_invariance_check(cfg.gains, r.invariance_L, spec.invariance_states,
                                          spec.invariance_steps, cfg.seed);

  ensure_dir(cfg.out_dir);
  CsvWriter out(cfg.out_dir / "verify_report.csv", {"key", "value"});
  auto kv = [&](const std::string& k, const std::string& v) { out.row(std::vector<std::string>{k, v}); };
  const auto& ly = r.lyapunov;
  kv("alpha", format_double(cfg.gains.alpha));
  kv("beta", format_double(cfg.gains.beta));
  kv("h", format_double(cfg.gains.h));
  kv("L", format_double(spec.L));
  kv("V_budget", format_double(spec.V_budget));
  kv("beta_bound", format_double(lyapunov_beta_bound(spec.L, spec.V_budget, cfg.gains.h)));
  kv("seed", std::to_string(cfg.seed));
  kv("lyapunov_samples", std::to_string(ly.samples));
  kv("lyapunov_violations", std::to_string(ly.violation_count));
  kv("lyapunov_worst_change", format_double(ly.worst_change));
  for (std::size_t c = 0; c < kLyapunovCaseCount; ++c) {
    kv("case_" + std::string(to_string(static_cast<LyapunovCase>(c))), std::to_string(ly.case_histogram[c]));
  }
  kv("deadbeat_trace", format_double(r.deadbeat.trace));
  kv("deadbeat_determinant", format_double(r.deadbeat.determinant));
  kv("deadbeat_max_eigen_modulus", format_double(r.deadbeat.max_eigen_modulus));
  kv("deadbeat_trials", std::to_string(r.deadbeat.trials));
  kv("deadbeat_max_abs_x1_after_two", format_double(r.deadbeat.max_abs_x1_after_two));
  kv("invariance_L", format_double(r.invariance_L));
  kv("invariance_trajectories", std::to_string(r.invariance.trajectories));
  kv("invariance_steps", std::to_string(r.invariance.steps));
  kv("invariance_max_residual", format_double(r.invariance.max_residual));
  kv("invariance_stayed_in_set", r.invariance.stayed_in_set ? "true" : "false");
  kv("passed", r.passed() ? "true" : "false");
  out.close();

  CsvWriter wit(cfg.out_dir / "verify_witnesses.csv", {"case", "x1", "x2", "delta0", "delta1", "change"});
  for (const auto& w : ly.violations) {
    wit.row(std::vector<std::string>{std::string(to_string(w.which)), format_double(w.x.x1),
                                     format_double(w.x.x2), format_double(w.delta0),
                                     format_double(w.delta1), format_double(w.change)});
  }
  wit.close();
  return r;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  try {
    switch (cfg.experiment) {
      case Experiment::PlotFunctions:
        cmd_plot_functions(cfg);
        log << "wrote psi1.csv, psi2.csv to " << cfg.out_dir.string() << '\n';
        return kExitOk;
      case Experiment::SimDisturbed:
      case Experiment::SimUndisturbed: {
        const SimResult r = cmd_sim(cfg);
        for (const auto& s : r.summaries) {
          log << to_string(s.variant) << ": t_C=" << (s.t_C ? format_double(*s.t_C) : "none")
              << " e_f=" << (s.e_f ? format_double(*s.e_f) : "none");
          if (s.diverged_at) log << " diverged at step " << *s.diverged_at;
          log << '\n';
        }
        return kExitOk;
      }
      case Experiment::SweepTc:
      case Experiment::SweepAccuracy: {
        const SweepResult r = cmd_sweep(cfg);
        log << "wrote sweep.csv (" << cfg.sweep.count << " points x " << r.tables.size()
            << " variants) to " << cfg.out_dir.string() << '\n';
        return kExitOk;
      }
      case Experiment::Trajectories: {
        const TrajectoryResult r = cmd_trajectories(cfg);
        for (std::size_t i = 0; i < r.h_list.size(); ++i) {
          log << "h=" << format_double(r.h_list[i])
              << " phase-plane deviation=" << format_double(r.phase_deviation[i])
              << " time-aligned deviation=" << format_double(r.time_deviation[i]) << '\n';
        }
        return kExitOk;
      }
      case Experiment::Verify: {
        const VerifyResult r = cmd_verify(cfg);
        log << "lyapunov: " << r.lyapunov.samples << " samples, " << r.lyapunov.violation_count
            << " violations, worst change " << format_double(r.lyapunov.worst_change) << '\n'
            << "deadbeat: max |x1| after two steps " << format_double(r.deadbeat.max_abs_x1_after_two)
            << '\n'
            << "invariance: max residual " << format_double(r.invariance.max_residual)
            << (r.invariance.stayed_in_set ? "" : " (left the set)") << '\n';
        return r.passed() ? kExitOk : kExitViolation;
      }
    }
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    // ParameterError and ConfigurationError.
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace stclab
