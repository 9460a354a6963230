// tvcn: command-line front end for time-varying correlation networks.

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tvcn/inference.hpp"
#include "tvcn/panel.hpp"
#include "tvcn/pipeline.hpp"
#include "tvcn/simlab.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string input;
  bool no_header = false;
  std::optional<int> case_id;
  std::size_t n = 600;
  double alpha = 0.1;
  std::string rule = "bh";
  std::size_t B = 1000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> h;
  std::optional<double> bandwidth;
  std::optional<std::size_t> w;
  std::optional<double> eta;
  std::optional<std::size_t> m;
  std::size_t lags = 0;
  std::optional<double> threshold;
  std::optional<std::size_t> window;
  std::size_t reps = 100;
  std::string perturb = "none";
  double delta = 0.1;
  std::string out = "tvcn_out";
  int workers = 0;
  std::vector<std::string> emit;
  bool verbose = false;
  bool dump_ensemble = false;
};

bool emits(const Options& o, const std::string& what) {
  return std::find(o.emit.begin(), o.emit.end(), what) != o.emit.end();
}

tvcn::PipelineOptions pipeline_options(const Options& o) {
  tvcn::PipelineOptions p;
  p.h = o.h;
  p.bandwidth = o.bandwidth;
  p.w = o.w;
  p.eta = o.eta;
  p.m = o.m;
  p.lags = o.lags;
  p.B = o.B;
  p.seed = o.seed;
  p.rule = tvcn::parse_rule(o.rule);
  p.alpha = o.alpha;
  return p;
}

tvcn::SimSpec sim_spec(const Options& o) {
  tvcn::SimSpec s;
  s.case_id = *o.case_id;
  s.n = o.n;
  s.seed = o.seed;
  s.validate();
  return s;
}

// Exactly one data source: a CSV file or a simulated case.
struct Source {
  tvcn::TimeSeriesPanel panel;
  std::optional<tvcn::GroundTruth> truth;
};

Source load_source(const Options& o) {
  if (!o.input.empty() && o.case_id) throw tvcn::UsageError("give either --input or --case, not both");
  if (o.input.empty() && !o.case_id) throw tvcn::UsageError("one of --input or --case is required");
  if (!o.input.empty()) return {tvcn::load_csv(o.input, !o.no_header), std::nullopt};
  auto sim = tvcn::simulate_case(sim_spec(o));
  return {std::move(sim.panel), std::move(sim.truth)};
}

void write_truth_csv(const tvcn::GroundTruth& truth, const std::vector<std::string>& labels,
                     const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw tvcn::Error(fmt::format("cannot write {}", path.string()));
  out << "i,l,label_i,label_l,null\n";
  const auto pairs = tvcn::hypothesis_pairs(truth.p);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out << pairs[k].i + 1 << ',' << pairs[k].l + 1 << ',' << labels[pairs[k].i] << ','
        << labels[pairs[k].l] << ',' << (truth.is_null[k] ? 1 : 0) << '\n';
  }
}

void write_edge_count_svg(const tvcn::NetworkSeries& series, const fs::path& path) {
  tvcn::ChartSeries line{"edges", {}, {}};
  for (const auto& snap : series.snapshots) {
    line.x.push_back(snap.t);
    line.y.push_back(static_cast<double>(snap.rejections()));
  }
  tvcn::write_line_chart_svg("Number of edges", {line}, path);
}

void report_pipeline(const Options& o, const tvcn::PipelineResult& res) {
  if (!o.verbose) return;
  const auto& r = res.report;
  std::cerr << fmt::format("h = {}, w = {}, eta = {:.4g}\n", r.h, r.w, r.eta);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_analyze(const Options& o) {
  const Source src = load_source(o);
  const auto res = tvcn::run_pipeline(src.panel, pipeline_options(o));
  report_pipeline(o, res);
  const fs::path out(o.out);
  tvcn::write_networks_json(res.networks, out / "networks.json");
  tvcn::write_pvalues_csv(res.pvalues, res.labels, out / "pvalues.csv");
  tvcn::write_tuning_report(res.report, res.config, out / "tuning.txt", o.verbose);
  if (emits(o, "estimates")) tvcn::write_estimates_csv(res.estimate, res.labels, out / "estimates.csv");
  if (emits(o, "svg")) write_edge_count_svg(res.networks, out / "edges.svg");
  if (o.dump_ensemble) tvcn::write_ensemble_csv(res.ensemble, out / "ensemble.csv");
  if (src.truth && o.lags == 0) {
    const auto report = tvcn::evaluate(res.networks, src.truth->as_null_truth(), 1.0 / 3.0, 2.0 / 3.0);
    tvcn::write_evaluation_csv(report, out / "evaluation.csv");
  }
  std::size_t edges = 0;
  for (const auto& s : res.networks.snapshots) edges += s.rejections();
  std::cout << fmt::format("analyze: {} time points, {} edges in total, written to {}\n",
                           res.networks.snapshots.size(), edges, out.string());
  return 0;
}

int cmd_tune(const Options& o) {
  const Source src = load_source(o);
  auto opts = pipeline_options(o);
  opts.tune_only = true;
  const auto res = tvcn::run_pipeline(src.panel, opts);
  report_pipeline(o, res);
  const fs::path path = fs::path(o.out) / "tuning.txt";
  tvcn::write_tuning_report(res.report, res.config, path, o.verbose);
  std::cout << fmt::format("tune: h = {}, w = {}, eta = {:.4g}, report in {}\n", res.report.h,
                           res.report.w, res.report.eta, path.string());
  return 0;
}

int cmd_simulate(const Options& o) {
  if (!o.case_id) throw tvcn::UsageError("simulate needs --case");
  const auto sim = tvcn::simulate_case(sim_spec(o));
  const fs::path out(o.out);
  tvcn::write_csv(sim.panel, out / "panel.csv");
  write_truth_csv(sim.truth, sim.panel.labels(), out / "truth.csv");
  std::cout << fmt::format("simulate: case {}, n = {}, p = {}, written to {}\n", *o.case_id,
                           sim.panel.n(), sim.panel.p(), out.string());
  return 0;
}

void write_experiment_outputs(const Options& o, const tvcn::ExperimentResult& result) {
  const fs::path out(o.out);
  std::ofstream summary(out / "summary.txt");
  summary << "method,maxFDP,avgFDP,maxFNP,avgFNP,peakFDP,peakFNP\n";
  std::vector<tvcn::ChartSeries> fdp_lines;
  std::vector<tvcn::ChartSeries> fnp_lines;
  for (std::size_t k = 0; k < result.methods.size(); ++k) {
    const std::string name = result.methods[k].name();
    tvcn::write_experiment_csv(result, k, out / fmt::format("experiment_{}.csv", name));
    if (emits(o, "trajectories")) {
      tvcn::write_trajectory_csv(result, k, out / fmt::format("trajectory_{}.csv", name));
    }
    const auto& a = result.aggregate[k];
    summary << fmt::format("{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n", name, 100 * a.max_fdp,
                           100 * a.avg_fdp, 100 * a.max_fnp, 100 * a.avg_fnp, 100 * a.peak_fdp,
                           100 * a.peak_fnp);
    std::cout << fmt::format(
        "{:<20} maxFDP {:6.2f}%  avgFDP {:6.2f}%  maxFNP {:6.2f}%  avgFNP {:6.2f}%  peakFDP {:6.2f}%  "
        "peakFNP {:6.2f}%\n",
        name, 100 * a.max_fdp, 100 * a.avg_fdp, 100 * a.max_fnp, 100 * a.avg_fnp, 100 * a.peak_fdp,
        100 * a.peak_fnp);
    tvcn::ChartSeries fdp{name, {}, {}};
    tvcn::ChartSeries fnp{name, {}, {}};
    for (const auto& pt : result.trajectory[k]) {
      fdp.x.push_back(pt.t);
      fdp.y.push_back(pt.mean_fdp);
      fnp.x.push_back(pt.t);
      fnp.y.push_back(pt.mean_fnp);
    }
    fdp_lines.push_back(std::move(fdp));
    fnp_lines.push_back(std::move(fnp));
  }
  if (emits(o, "svg")) {
    tvcn::write_line_chart_svg("Mean FDP", fdp_lines, out / "fdp.svg");
    tvcn::write_line_chart_svg("Mean FNP", fnp_lines, out / "fnp.svg");
  }
}

tvcn::ExperimentSpec experiment_spec(const Options& o, std::vector<tvcn::Method> methods) {
  if (!o.case_id) throw tvcn::UsageError("this subcommand needs --case");
  tvcn::ExperimentSpec spec;
  spec.sim = sim_spec(o);
  spec.reps = o.reps;
  spec.seed = o.seed;
  spec.alpha = o.alpha;
  spec.methods = std::move(methods);
  spec.pipeline = pipeline_options(o);
  return spec;
}

int cmd_experiment(const Options& o) {
  auto spec = experiment_spec(o, {tvcn::Method::bh(), tvcn::Method::by()});
  std::mutex mu;
  std::size_t done = 0;
  if (o.verbose) {
    spec.observer = [&](std::size_t rep, const tvcn::SimulatedPanel&, const tvcn::PipelineResult& res) {
      std::lock_guard lock(mu);
      ++done;
      std::cerr << fmt::format("rep {} finished ({}/{}), w = {}\n", rep, done, o.reps, res.report.w);
    };
  }
  tvcn::ExperimentResult result;
  if (o.perturb == "none") {
    result = tvcn::run_experiment(spec);
  } else {
    const auto kind = o.perturb == "bandwidth" ? tvcn::Perturbation::bandwidth : tvcn::Perturbation::lag;
    result = tvcn::sensitivity_run(spec, kind, o.delta);
  }
  write_experiment_outputs(o, result);
  return 0;
}

int cmd_baseline(const Options& o) {
  if (!o.threshold) throw tvcn::UsageError("baseline needs --threshold");
  if (!o.input.empty() && !o.case_id) {
    const auto panel = tvcn::load_csv(o.input, !o.no_header);
    const std::size_t window = o.window.value_or(tvcn::default_baseline_window(panel.n()));
    const auto series = tvcn::moving_window_baseline(panel, window, *o.threshold);
    tvcn::write_networks_json(series, fs::path(o.out) / "networks.json");
    std::cout << fmt::format("baseline: {} time points, window {}, written to {}\n",
                             series.snapshots.size(), window, o.out);
    return 0;
  }
  if (!o.input.empty()) throw tvcn::UsageError("give either --input or --case, not both");
  const auto spec = experiment_spec(o, {tvcn::Method::moving(*o.threshold, o.window.value_or(0))});
  write_experiment_outputs(o, tvcn::run_experiment(spec));
  return 0;
}

json manifest(const std::string& command, const CLI::App& app, int argc, char** argv, int workers,
              std::uint64_t seed) {
  json m;
  m["tool"] = "tvcn";
  m["version"] = kVersion;
  m["subcommand"] = command;
  m["argv"] = std::vector<std::string>(argv, argv + argc);
  m["config"] = app.config_to_str(false, false);
  m["seed"] = seed;
  m["workers"] = workers;
  m["versions"] = {{"compiler", __VERSION__},
                   {"openmp", _OPENMP},
                   {"fmt", FMT_VERSION},
                   {"cli11", CLI11_VERSION},
                   {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                                 NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)}};
  return m;
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Time-varying correlation networks with FDR control", "tvcn"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--input", o.input, "CSV panel, one row per time point");
  app.add_flag("--no-header", o.no_header, "Input CSV has no header row");
  app.add_option("--case", o.case_id, "Simulation case (1 or 2)")->check(CLI::IsMember({1, 2}));
  app.add_option("--n", o.n, "Sample size of simulated data")->capture_default_str();
  app.add_option("--alpha", o.alpha, "Target FDR level")->capture_default_str();
  app.add_option("--rule", o.rule, "Step-up rule")
      ->check(CLI::IsMember({"bh", "by"}, CLI::ignore_case))
      ->capture_default_str();
  app.add_option("--B", o.B, "Bootstrap replicates")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for simulation and bootstrap")->capture_default_str();
  app.add_option("--h", o.h, "Differencing lag (default ceil(2 log n))");
  app.add_option("--bandwidth", o.bandwidth, "Common bandwidth b, skipping GCV");
  app.add_option("--w", o.w, "Bootstrap block window, skipping minimum volatility");
  app.add_option("--eta", o.eta, "Long-run variance bandwidth");
  app.add_option("--m", o.m, "Long-run variance block length for every pair");
  app.add_option("--lags", o.lags, "Stack K lagged copies of every series")->capture_default_str();
  app.add_option("--threshold", o.threshold, "Moving-window baseline correlation threshold");
  app.add_option("--window", o.window, "Moving-window baseline half-width (default n/10)");
  app.add_option("--reps", o.reps, "Monte Carlo replications")->capture_default_str();
  app.add_option("--perturb", o.perturb, "Sensitivity run: perturb the bandwidth or the lag")
      ->check(CLI::IsMember({"none", "bandwidth", "lag"}))
      ->capture_default_str();
  app.add_option("--delta", o.delta, "Relative perturbation for --perturb")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--emit", o.emit, "Extra artifacts")
      ->delimiter(',')
      ->check(CLI::IsMember({"networks", "estimates", "trajectories", "svg"}));
  app.add_flag("--verbose", o.verbose, "Progress and tuning tables");
  app.add_flag("--dump-ensemble", o.dump_ensemble, "Write bootstrap sup-statistics (debug)");

  auto* analyze = app.add_subcommand("analyze", "Estimate networks from a panel or a simulated case");
  auto* simulate = app.add_subcommand("simulate", "Write a simulated panel and its ground truth");
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo FDP/FNP study with BH and BY");
  auto* baseline = app.add_subcommand("baseline", "Moving-window correlation thresholding");
  auto* tune = app.add_subcommand("tune", "Select b, w, eta and m and write the tuning report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  const int workers = o.workers > 0 ? o.workers : omp_get_num_procs();
  omp_set_num_threads(workers);

  std::string command = app.get_subcommands().front()->get_name();
  try {
    fs::create_directories(o.out);
    {
      std::ofstream mf(fs::path(o.out) / "manifest.json");
      mf << manifest(command, app, argc, argv, workers, o.seed).dump(2) << '\n';
    }
    if (analyze->parsed()) return cmd_analyze(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (experiment->parsed()) return cmd_experiment(o);
    if (baseline->parsed()) return cmd_baseline(o);
    if (tune->parsed()) return cmd_tune(o);
  } catch (const tvcn::UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
