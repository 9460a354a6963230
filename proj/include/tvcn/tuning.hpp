#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tvcn/bootstrap.hpp"
#include "tvcn/common.hpp"
#include "tvcn/estimator.hpp"
#include "tvcn/kernel.hpp"
#include "tvcn/panel.hpp"

namespace tvcn {

/// Candidate grids for the data-driven parameter choices.
struct TuningConfig {
  std::size_t h = 0;
  std::vector<double> bandwidths;
  std::vector<std::size_t> w;
  std::vector<double> eta;
  std::vector<std::size_t> m;
  std::size_t m0 = 0;

  /// h = ceil(lag_factor log n); grids {0.6, 0.8, 1.0, 1.2, 1.4} times
  /// n^{-1/5} (b), n^{2/5} (w, rounded), n^{-1/7} (eta) and n^{2/7} (m, rounded);
  /// m0 = floor(n^{2/7}). Candidates violating eta < 1/2 or w, m >= 2 are dropped
  /// and rounded duplicates removed.
  static TuningConfig defaults(std::size_t n, double lag_factor = 2.0);

  /// Grids ascending, at least 3 entries each, bandwidths in (0, 1/2).
  void validate() const;
};

std::size_t default_lag(std::size_t n, double lag_factor = 2.0);

struct GcvEntry {
  double bandwidth = 0.0;
  double score = 0.0;  // NaN when the candidate was skipped
  double trace = 0.0;
};

struct GcvResult {
  double bandwidth = 0.0;
  std::vector<GcvEntry> table;
};

/// Generalized cross validation for the product series y_i y_l:
///   GCV(b) = N^-1 |Y - Yhat|^2 / (1 - tr Q(b) / N)^2,  N = n - h,
/// with the same grid smoother as the field estimator. Candidates with
/// tr Q / N >= 1 are skipped; throws when every candidate is skipped.
GcvResult gcv_bandwidth(const DifferencedPanel& diffs, Pair pair, const std::vector<double>& grid,
                        const Kernel& kernel);

/// Trace of the hat matrix of the grid smoother for one pair and bandwidth.
double smoother_trace(const DifferencedPanel& diffs, double b, const Kernel& kernel);

/// Per-pair GCV (diagonal included), then entries above 5 min b are capped
/// so the ratio bound min b / max b >= 0.2 holds.
struct BandwidthSelection {
  Matrix chosen;  // GCV choice before capping
  std::vector<GcvResult> per_pair;  // lower_index order
  std::optional<BandwidthSet> bands;
  bool capped = false;
};

BandwidthSelection select_bandwidths(const DifferencedPanel& diffs, const std::vector<double>& grid,
                                     const Kernel& kernel, ExecPolicy policy = ExecPolicy::parallel);

/// Caps every entry at 5 times the smallest one.
Matrix cap_bandwidth_ratio(const Matrix& chosen);

/// Minimum-volatility table over a (w, eta) grid.
struct MvResult {
  std::size_t w_index = 0;
  std::size_t eta_index = 0;
  Matrix s2;  // rows: w, cols: eta
  Matrix mv;  // NaN for skipped cells
};

/// Neighbourhood standard deviations of an s^2 table and the arg-min
/// (ties toward smaller row, then smaller column).
MvResult mv_from_table(const Matrix& s2);

/// What the minimum-volatility table measures. `bootstrap_variance` divides the
/// raw sum of squared block sums by 2 w ceil(n b), the bootstrap normalizer, so
/// each cell is the summed conditional variance of the bootstrap statistics;
/// `raw_sum` keeps the bare sum, which grows roughly linearly in w.
enum class MvStatistic { bootstrap_variance, raw_sum };

/// s^2(w, eta) = sum over pairs, j and s of Shat^2 with m = m0, s running over
/// the bootstrap's multiplier range. The estimate's long-run variance is replaced.
MvResult mv_select(CorrFieldEstimate& est, const BandwidthSet& bands, const TuningConfig& cfg,
                   const Kernel& kernel, ExecPolicy policy = ExecPolicy::parallel,
                   MultiplierRange range = MultiplierRange::global,
                   MvStatistic statistic = MvStatistic::bootstrap_variance);

/// Arg-min over interior indices of the window mean of the 3-point SD of
/// Gamma^2 across neighbouring m; gamma_by_m[c][q] is candidate c at window point q.
std::size_t refine_from_table(const std::vector<std::vector<double>>& gamma_by_m);

/// Block length for one hypothesis given the selected eta.
std::size_t refine_m(const CorrFieldEstimate& est, std::size_t k, double eta,
                     const std::vector<std::size_t>& m_grid, const Kernel& kernel);

struct TuningReport {
  std::size_t n = 0;
  std::size_t h = 0;
  std::vector<std::string> labels;
  BandwidthSelection bandwidths;
  bool bandwidth_tuned = false;
  std::size_t w = 0;
  double eta = 0.0;
  MvResult mv;
  bool mv_tuned = false;
  std::vector<std::size_t> m;  // hypothesis order
  bool m_tuned = false;
  std::vector<std::string> warnings;
};

/// Key = value summary; the GCV and MV tables are appended when verbose.
void write_tuning_report(const TuningReport& report, const TuningConfig& cfg,
                         const std::filesystem::path& path, bool verbose);

}  // namespace tvcn
