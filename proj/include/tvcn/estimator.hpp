#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tvcn/common.hpp"
#include "tvcn/kernel.hpp"
#include "tvcn/panel.hpp"

namespace tvcn {

struct LocalLinearFit {
  double level = 0.0;  // eta0: fitted value at t
  double slope = 0.0;  // eta1: fitted derivative at t
};

/// Kernel-weighted least squares of z on (1, t_j - t) with weights K_b(t_j - t).
/// Throws when fewer than 5 points fall inside (t - b, t + b) or when the
/// 2x2 normal matrix has condition number above 1e12.
LocalLinearFit local_linear_fit(std::span<const double> times, std::span<const double> z,
                                double t, double b, const Kernel& kernel);

/// Per-pair bandwidths b_{i,l} (symmetric, diagonal included) with
/// b = max b_{i,l} and c_{i,l} = sqrt(b / b_{i,l}).
class BandwidthSet {
 public:
  /// Validates entries in (0, 1/2), symmetry, and min/max ratio >= 0.2.
  explicit BandwidthSet(Matrix bandwidths);

  static BandwidthSet uniform(std::size_t p, double b);

  std::size_t p() const { return b_.rows(); }
  double operator()(std::size_t i, std::size_t l) const { return b_(i, l); }
  double max() const { return b_max_; }
  double scale(std::size_t i, std::size_t l) const { return c_(i, l); }
  const Matrix& matrix() const { return b_; }

  /// Multiplies every bandwidth by factor (validation re-applied).
  BandwidthSet scaled(double factor) const;

 private:
  Matrix b_;
  Matrix c_;
  double b_max_ = 0.0;
};

/// Block lengths m_{i,l} (indexed by hypothesis_index) and the bandwidth eta
/// used by the long-run variance estimator.
struct LrvParams {
  std::vector<std::size_t> blocks;
  double eta = 0.0;

  static LrvParams uniform(std::size_t p, std::size_t m, double eta);
};

/// Evaluation window [ceil(n b), n - ceil(n b)] in 1-based grid indices.
IndexRange evaluation_window(std::size_t n, double b_max);

/// Local-linear estimates for one pair (i >= l) on the full grid.
/// Vectors have length n and are indexed by j - 1; entries j <= h are NaN.
struct PairField {
  std::vector<double> beta;   // beta_hat
  std::vector<double> gamma;  // beta_hat / 2
  std::vector<double> sigma;  // sqrt(gamma_ii gamma_ll)
  std::vector<double> rho;    // gamma / sigma, not clipped to [-1, 1]
  std::vector<double> resid;  // y_i y_l - beta_hat
};

/// Time-varying covariance / correlation fields and the innovation series
/// feeding the bootstrap.
///
/// Inside the evaluation window every fit is the local-linear estimator.
/// Outside it, where the kernel support is cut by the ends of the
/// differenced sample, the fit falls back to the local-constant estimator:
/// with a kernel whose second moment vanishes the local-linear normal
/// matrix passes through singularity near the boundary.
///
/// |rho| may exceed 1 in finite samples; the test statistic consumes the
/// raw value.
struct CorrFieldEstimate {
  std::size_t n = 0;
  std::size_t h = 0;
  std::size_t p = 0;
  IndexRange window;
  std::vector<PairField> fields;              // lower_index(i, l)
  std::vector<std::vector<double>> xi_tilde;  // hypothesis_index; raw-product innovations
  std::vector<std::vector<double>> xi_hat;    // hypothesis_index; residual innovations
  std::vector<std::vector<double>> lrv;       // Gamma^2; NaN outside the window

  const PairField& field(std::size_t i, std::size_t l) const { return fields[lower_index(i, l)]; }
  double rho(std::size_t i, std::size_t l, std::size_t j) const { return field(i, l).rho[j - 1]; }
  bool has_lrv() const { return !lrv.empty(); }

  /// Nearest-grid-point lookup for an arbitrary t in (0, 1).
  std::size_t nearest_index(double t) const;
};

/// Every field except the long-run variance (which depends on m and eta).
CorrFieldEstimate estimate_moments(const DifferencedPanel& diffs, const BandwidthSet& bands,
                                   const Kernel& kernel,
                                   ExecPolicy policy = ExecPolicy::parallel);

/// Gamma^2_{i,l}(t_q) for q in the window, residual-based, for one hypothesis.
/// Blocks starting before h+1 or running past n are dropped.
std::vector<double> long_run_variance(const CorrFieldEstimate& est, std::size_t k,
                                      std::size_t m, double eta, const Kernel& kernel);

void attach_long_run_variance(CorrFieldEstimate& est, const LrvParams& params,
                              const Kernel& kernel, ExecPolicy policy = ExecPolicy::parallel);

CorrFieldEstimate estimate_corr_field(const DifferencedPanel& diffs, const BandwidthSet& bands,
                                      const Kernel& kernel, const LrvParams& params,
                                      ExecPolicy policy = ExecPolicy::parallel);

/// Standardized innovations c K_b(t_j - t_s) xi_tilde_j / Gamma(t_s),
/// evaluated lazily. j is any grid index (innovations with j <= h are zero);
/// s must lie in the evaluation window.
class InnovationField {
 public:
  InnovationField(const CorrFieldEstimate& est, const BandwidthSet& bands, const Kernel& kernel);

  double operator()(std::size_t j, std::size_t s, std::size_t k) const;

  const CorrFieldEstimate& estimate() const { return *est_; }
  const BandwidthSet& bands() const { return *bands_; }
  std::size_t n() const { return est_->n; }
  std::size_t pairs() const { return pairs_.size(); }

 private:
  const CorrFieldEstimate* est_;
  const BandwidthSet* bands_;
  const Kernel* kernel_;
  std::vector<Pair> pairs_;
  std::vector<std::vector<double>> inv_gamma_;  // 1 / Gamma(t_s), per hypothesis
};

InnovationField standardized_innovations(const CorrFieldEstimate& est, const BandwidthSet& bands,
                                         const Kernel& kernel);

/// One row per (pair, t_j) in the window: beta, gamma, sigma, rho, lrv.
void write_estimates_csv(const CorrFieldEstimate& est, const std::vector<std::string>& labels,
                         const std::filesystem::path& path);

}  // namespace tvcn
