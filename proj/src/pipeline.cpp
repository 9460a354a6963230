#include "tvcn/pipeline.hpp"

#include <fmt/format.h>

#include "parallel.hpp"

namespace tvcn {

namespace {

template <class T>
void warn_if_endpoint(std::vector<std::string>& warnings, const char* name, const std::vector<T>& grid,
                      T value) {
  if (grid.empty()) return;
  if (value == grid.front() || value == grid.back()) {
    warnings.push_back(fmt::format("{} = {} is a grid endpoint; the grid may be misplaced", name, value));
  }
}

}  // namespace

PipelineResult run_pipeline(const TimeSeriesPanel& panel, const PipelineOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) {
    throw UsageError(fmt::format("alpha = {} outside (0, 1)", opt.alpha));
  }
  if (!(opt.bandwidth_factor > 0.0)) throw UsageError("bandwidth factor must be positive");
  if (!(opt.lag_factor > 0.0)) throw UsageError("lag factor must be positive");
  const Kernel& kernel = fourth_order_epanechnikov();
  const TimeSeriesPanel stacked = stack_lags(panel, opt.lags);
  const std::size_t n = stacked.n();
  const std::size_t p = stacked.p();

  PipelineResult res;
  res.labels = stacked.labels();
  res.config = TuningConfig::defaults(n, opt.lag_factor);
  if (opt.h) res.config.h = *opt.h;
  res.config.validate();

  TuningReport& report = res.report;
  report.n = n;
  report.h = res.config.h;
  report.labels = res.labels;

  const DifferencedPanel diffs = difference(stacked, res.config.h);

  if (opt.bandwidth) {
    res.bands.emplace(BandwidthSet::uniform(p, *opt.bandwidth));
  } else {
    report.bandwidths = select_bandwidths(diffs, res.config.bandwidths, kernel, opt.policy);
    report.bandwidth_tuned = true;
    if (report.bandwidths.capped) report.warnings.push_back("bandwidths capped to keep min/max >= 0.2");
    for (double b : report.bandwidths.chosen.data()) {
      if (b == res.config.bandwidths.front() || b == res.config.bandwidths.back()) {
        report.warnings.push_back(fmt::format("GCV picked grid endpoint b = {}", b));
        break;
      }
    }
    res.bands = report.bandwidths.bands;
  }
  if (opt.bandwidth_factor != 1.0) res.bands = res.bands->scaled(opt.bandwidth_factor);
  const BandwidthSet& bands = *res.bands;
  report.bandwidths.bands = bands;

  res.estimate = estimate_moments(diffs, bands, kernel, opt.policy);

  double eta = 0.0;
  if (opt.w && opt.eta) {
    res.w = *opt.w;
    eta = *opt.eta;
  } else {
    report.mv = mv_select(res.estimate, bands, res.config, kernel, opt.policy, opt.range,
                          opt.mv_statistic);
    report.mv_tuned = true;
    res.w = opt.w.value_or(res.config.w[report.mv.w_index]);
    eta = opt.eta.value_or(res.config.eta[report.mv.eta_index]);
    if (!opt.w) warn_if_endpoint(report.warnings, "w", res.config.w, res.w);
    if (!opt.eta) warn_if_endpoint(report.warnings, "eta", res.config.eta, eta);
  }

  const std::size_t pairs = pair_count(p);
  if (opt.m) {
    res.lrv = LrvParams::uniform(p, *opt.m, eta);
  } else {
    res.lrv.eta = eta;
    res.lrv.blocks.assign(pairs, 0);
    detail::for_each_index(pairs, opt.policy, [&](std::size_t k) {
      res.lrv.blocks[k] = refine_m(res.estimate, k, eta, res.config.m, kernel);
    });
    report.m_tuned = true;
  }
  attach_long_run_variance(res.estimate, res.lrv, kernel, opt.policy);
  report.w = res.w;
  report.eta = eta;
  report.m = res.lrv.blocks;
  if (opt.tune_only) return res;

  const InnovationField xi(res.estimate, bands, kernel);
  const BlockSums sums = block_sums(xi, res.w, opt.policy);
  res.ensemble = draw_ensemble(sums, bands, opt.B, opt.seed, opt.policy, opt.range);
  res.statistics = test_statistics(res.estimate, bands);
  res.pvalues = pvalues(res.statistics, res.ensemble, opt.policy);
  if (opt.force_unit_pvalues) {
    for (auto& counts : res.pvalues.exceed) {
      for (auto& c : counts) c = static_cast<std::uint32_t>(opt.B);
    }
  }
  res.networks = build_networks(res.pvalues, ThresholdRule(opt.rule, opt.alpha, pairs), res.labels);
  return res;
}

}  // namespace tvcn
