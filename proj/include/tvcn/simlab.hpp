#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvcn/inference.hpp"
#include "tvcn/panel.hpp"
#include "tvcn/pipeline.hpp"

namespace tvcn {

/// Synthetic design: a time-varying AR(1) with block-correlated innovations
/// plus piecewise-linear means with jumps. Case 1 has p = 6 (two blocks of
/// three), case 2 has p = 9 (three blocks).
struct SimSpec {
  int case_id = 1;
  std::size_t n = 600;
  std::uint64_t seed = 0;
  std::size_t burn_in = 200;
  // Test hooks.
  double noise_scale = 1.0;
  std::optional<double> frozen_time;  // evaluate the AR coefficient at this t throughout
  bool include_mean = true;

  /// n >= 300, burn_in >= 100, case 1 or 2, noise_scale >= 0.
  void validate() const;
  std::size_t p() const { return case_id == 1 ? 6 : 9; }
};

struct GroundTruth {
  std::size_t p = 0;
  std::vector<bool> is_null;  // hypothesis order; constant in t

  std::size_t nulls() const;
  double target_fdr(double alpha) const;
  NullTruth as_null_truth() const { return NullTruth::constant(is_null); }
};

struct SimulatedPanel {
  TimeSeriesPanel panel;
  GroundTruth truth;
};

/// f0(t) = 0.25 - 0.1 (t - 1/2)^2.
double ar_coefficient(double t);

/// Mean of 0-based column i at time t: 0.3 + 0.4t before the first breakpoint,
/// 0.7 - 0.4t up to the second, 0.2 + 0.4t afterwards.
double mean_function(std::size_t i, double t);

/// M = (4/5) I_p + (1/5) I_{p/3} (x) J_3.
Matrix innovation_mixing(std::size_t p);

GroundTruth ground_truth(std::size_t p);

SimulatedPanel simulate_case(const SimSpec& spec);

/// Edge (i, l) at t_j iff |sample correlation over rows j-w..j+w| > threshold;
/// times without a full window are skipped.
NetworkSeries moving_window_baseline(const TimeSeriesPanel& panel, std::size_t w, double threshold);

/// Half-window used when none is given: round(n / 10).
std::size_t default_baseline_window(std::size_t n);

enum class MethodKind { bh, by, moving_window };

struct Method {
  MethodKind kind = MethodKind::bh;
  double threshold = 0.0;      // moving window only
  std::size_t window = 0;      // moving window only; 0 selects the default

  std::string name() const;
  static Method bh() { return {MethodKind::bh}; }
  static Method by() { return {MethodKind::by}; }
  static Method moving(double threshold, std::size_t window = 0) {
    return {MethodKind::moving_window, threshold, window};
  }
};

struct ExperimentSpec {
  SimSpec sim;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  std::vector<Method> methods{Method::bh()};
  PipelineOptions pipeline;  // rule, alpha and seed are overwritten per replication
  double lo = 1.0 / 3.0;
  double hi = 2.0 / 3.0;
  ExecPolicy policy = ExecPolicy::parallel;
  /// Called once per replication with the pipeline output (skipped when only
  /// baseline methods run). May be invoked concurrently for different reps.
  std::function<void(std::size_t rep, const SimulatedPanel&, const PipelineResult&)> observer;
};

struct Summary {
  double max_fdp = 0.0;  // mean over replications of the per-replication maximum
  double avg_fdp = 0.0;
  double max_fnp = 0.0;
  double avg_fnp = 0.0;
  double peak_fdp = 0.0;  // maximum over t of the replication-averaged trajectory
  double peak_fnp = 0.0;
};

struct TrajectoryPoint {
  double t = 0.0;
  double mean_fdp = 0.0;
  double mean_fnp = 0.0;
  std::size_t count = 0;
};

struct RepOutcome {
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<EvalReport> reports;  // one per method
};

struct ExperimentResult {
  std::vector<Method> methods;
  std::vector<RepOutcome> reps;
  std::vector<Summary> aggregate;                        // per method
  std::vector<std::vector<TrajectoryPoint>> trajectory;  // per method
};

/// Seed of replication rep (SplitMix64 of the experiment seed).
std::uint64_t replication_seed(std::uint64_t seed, std::size_t rep);

ExperimentResult run_experiment(const ExperimentSpec& spec);

enum class Perturbation { none, bandwidth, lag };

/// Re-runs the experiment with b scaled by (1 + delta) after selection, or with
/// h = ceil(2 (1 + delta) log n).
ExperimentResult sensitivity_run(ExperimentSpec spec, Perturbation kind, double delta);

/// rep, maxFDP, avgFDP, maxFNP, avgFNP rows plus a "mean" aggregate row.
void write_experiment_csv(const ExperimentResult& result, std::size_t method,
                          const std::filesystem::path& path);

/// t, meanFDP, meanFNP.
void write_trajectory_csv(const ExperimentResult& result, std::size_t method,
                          const std::filesystem::path& path);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static SVG line chart.
void write_line_chart_svg(const std::string& title, const std::vector<ChartSeries>& series,
                          const std::filesystem::path& path);

}  // namespace tvcn
