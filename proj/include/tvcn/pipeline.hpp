#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvcn/bootstrap.hpp"
#include "tvcn/estimator.hpp"
#include "tvcn/inference.hpp"
#include "tvcn/panel.hpp"
#include "tvcn/tuning.hpp"

namespace tvcn {

/// Everything that parameterizes one end-to-end run. Unset overrides are
/// chosen from the data (GCV for b, minimum volatility for w, eta and m).
struct PipelineOptions {
  std::optional<std::size_t> h;
  double lag_factor = 2.0;  // h = ceil(lag_factor log n) when h is unset
  std::optional<double> bandwidth;
  double bandwidth_factor = 1.0;  // applied after selection
  std::optional<std::size_t> w;
  std::optional<double> eta;
  std::optional<std::size_t> m;
  std::size_t lags = 0;  // K for multi-lag stacking
  std::size_t B = 1000;
  std::uint64_t seed = 0;
  RuleKind rule = RuleKind::BH;
  double alpha = 0.1;
  ExecPolicy policy = ExecPolicy::parallel;
  MultiplierRange range = MultiplierRange::global;
  MvStatistic mv_statistic = MvStatistic::bootstrap_variance;
  bool force_unit_pvalues = false;  // test hook: every P-value becomes 1
  bool tune_only = false;           // stop once b, w, eta and m are fixed
};

struct PipelineResult {
  std::vector<std::string> labels;
  TuningConfig config;
  TuningReport report;
  std::optional<BandwidthSet> bands;
  CorrFieldEstimate estimate;
  std::size_t w = 0;
  LrvParams lrv;
  BootstrapEnsemble ensemble;
  StatisticField statistics;
  PValueField pvalues;
  NetworkSeries networks;
};

/// Stack lags, difference, tune, estimate, bootstrap, compute P-values and
/// apply the step-up rule at every window time.
PipelineResult run_pipeline(const TimeSeriesPanel& panel, const PipelineOptions& options);

}  // namespace tvcn
