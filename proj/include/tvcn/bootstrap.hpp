#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "tvcn/common.hpp"
#include "tvcn/estimator.hpp"

namespace tvcn {

/// Differences of adjacent w-blocks of standardized innovations,
///   S[j, s] = sum_{a=s-w+1}^{s} xi(a+j, c+j) - sum_{a=s+1}^{s+w} xi(a+j, c+j),
/// for j in [1, n - 2c], s in [w, 2c - w], c = ceil(n b).
struct BlockSums {
  std::size_t n = 0;
  std::size_t w = 0;
  std::size_t offset = 0;  // c = ceil(n b)
  std::vector<Matrix> values;  // per hypothesis: row j-1, column s-w

  std::size_t starts() const { return n - 2 * offset; }
  std::size_t s_first() const { return w; }
  std::size_t s_last() const { return 2 * offset - w; }
  double at(std::size_t j, std::size_t s, std::size_t k) const { return values[k](j - 1, s - w); }

  /// Upper end of a pair's multiplier sum, min(2c - w, 2 ceil(n b_il) - w);
  /// returns w - 1 (an empty range) when the pair's bandwidth is too small.
  std::size_t s_last_for(double b_pair) const;
};

/// Requires 2 <= w < ceil(n b).
BlockSums block_sums(const InnovationField& xi, std::size_t w,
                     ExecPolicy policy = ExecPolicy::parallel);

/// Standardized innovation xi(j, s, k) for 1-based grid indices j, s and hypothesis k.
using InnovationSource = std::function<double(std::size_t j, std::size_t s, std::size_t k)>;

/// Block sums of an arbitrary innovation source; offset plays the role of ceil(n b).
BlockSums block_sums(std::size_t n, std::size_t offset, std::size_t pairs, const InnovationSource& xi,
                     std::size_t w, ExecPolicy policy = ExecPolicy::parallel);

/// Upper end of the multiplier sum over s. `global` runs every pair to
/// 2 ceil(n b) - w, which covers the whole support of K_{b_il} around the
/// block centre; `per_pair` stops at 2 ceil(n b_il) - w.
enum class MultiplierRange { global, per_pair };

/// Last s used for a pair with bandwidth b_pair under the given range rule.
std::size_t multiplier_s_last(const BlockSums& sums, double b_pair, MultiplierRange range);

/// B sup-statistics per pair; z(r, k) >= 0.
struct BootstrapEnsemble {
  std::size_t B = 0;
  std::uint64_t seed = 0;
  Matrix z;  // B x pairs
};

/// Gaussian multipliers R^{(r)}_s as a B x n matrix (column s-1), one
/// Philox stream per replicate.
Matrix bootstrap_multipliers(std::size_t n, std::size_t B, std::uint64_t seed);

/// Z^{(r)}_{i,l} = max_j |sum_{s=w}^{s_last} S[j,s] R^{(r)}_{j+s}| / sqrt(2 w ceil(n b)),
/// with the same multipliers shared by every pair in a replicate. Requires B >= 100.
BootstrapEnsemble draw_ensemble(const BlockSums& sums, const BandwidthSet& bands, std::size_t B,
                                std::uint64_t seed, ExecPolicy policy = ExecPolicy::parallel,
                                MultiplierRange range = MultiplierRange::global);

/// Same statistic with caller-supplied multipliers (B x n); no lower bound on B.
BootstrapEnsemble draw_ensemble_with(const BlockSums& sums, const BandwidthSet& bands,
                                     const Matrix& multipliers,
                                     ExecPolicy policy = ExecPolicy::parallel,
                                     MultiplierRange range = MultiplierRange::global);

/// Test statistics on the evaluation window; values[k][j - window.first].
struct StatisticField {
  std::size_t n = 0;
  IndexRange window;
  std::vector<std::vector<double>> values;

  double at(std::size_t k, std::size_t j) const { return values[k][j - window.first]; }
};

/// T_{i,l}(t) = sqrt(n b_il) |rho(t)| / Gamma(t).
StatisticField test_statistics(const CorrFieldEstimate& est, const BandwidthSet& bands);

/// P_{i,l}(t) = #{r : T < Z^{(r)}} / B, stored as exact counts.
struct PValueField {
  std::size_t n = 0;
  std::size_t B = 0;
  IndexRange window;
  std::vector<std::vector<std::uint32_t>> exceed;  // per hypothesis, j - window.first

  double value(std::size_t k, std::size_t j) const {
    return static_cast<double>(exceed[k][j - window.first]) / static_cast<double>(B);
  }
  std::size_t pairs() const { return exceed.size(); }
};

PValueField pvalues(const StatisticField& stats, const BootstrapEnsemble& ens,
                    ExecPolicy policy = ExecPolicy::parallel);

/// Diagnostic dump: pair, replicate, Z.
void write_ensemble_csv(const BootstrapEnsemble& ens, const std::filesystem::path& path);

/// P-value field as CSV: one row per grid time, one column per pair.
void write_pvalues_csv(const PValueField& field, const std::vector<std::string>& labels,
                       const std::filesystem::path& path);

namespace reference {

// Straight transcriptions of the formulas, kept to validate the OpenMP kernels.
BlockSums block_sums(const InnovationField& xi, std::size_t w);
BlockSums block_sums(std::size_t n, std::size_t offset, std::size_t pairs, const InnovationSource& xi,
                     std::size_t w);
BootstrapEnsemble draw_ensemble_with(const BlockSums& sums, const BandwidthSet& bands,
                                     const Matrix& multipliers,
                                     MultiplierRange range = MultiplierRange::global);
PValueField pvalues(const StatisticField& stats, const BootstrapEnsemble& ens);

}  // namespace reference

}  // namespace tvcn
