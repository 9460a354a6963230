#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvcn/bootstrap.hpp"
#include "tvcn/common.hpp"

namespace tvcn {

inline constexpr double kEulerGamma = 0.5772156649015329;

enum class RuleKind { BH, BY };

std::string to_string(RuleKind kind);
RuleKind parse_rule(const std::string& text);

/// Step-up thresholds: BH uses alpha r / m; BY divides that by log m + gamma.
class ThresholdRule {
 public:
  ThresholdRule(RuleKind kind, double alpha, std::size_t m);

  double operator()(std::size_t r) const;  // r is 1-based
  RuleKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  std::size_t m() const { return m_; }

 private:
  RuleKind kind_;
  double alpha_;
  std::size_t m_;
  double divisor_ = 1.0;
};

/// R = max{r : P_(r) <= Delta(r)}; rejects every hypothesis with P <= Delta(R).
/// Returns rejected indices in ascending order.
std::vector<std::size_t> step_up(std::span<const double> pvalues, const ThresholdRule& rule);

struct NetworkSnapshot {
  std::size_t index = 0;  // 1-based grid index
  double t = 0.0;
  std::vector<Pair> edges;
  std::optional<double> max_rejected_pvalue;

  std::size_t rejections() const { return edges.size(); }
};

struct NetworkSeries {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::string> labels;
  double alpha = 0.0;
  std::string method;
  std::vector<NetworkSnapshot> snapshots;
};

/// One snapshot per window time, step-up applied independently at each t.
NetworkSeries build_networks(const PValueField& field, const ThresholdRule& rule,
                             const std::vector<std::string>& labels);

/// Writes {n, p, alpha, rule, labels, times, snapshots: [{t, edges, pvalues_rejected_max}]}.
void write_networks_json(const NetworkSeries& series, const std::filesystem::path& path);

/// True null membership H0(t), one flag per hypothesis (true = null).
class NullTruth {
 public:
  static NullTruth constant(std::vector<bool> is_null);
  void set(std::size_t j, std::vector<bool> is_null);
  const std::vector<bool>* at(std::size_t j) const;

 private:
  std::optional<std::vector<bool>> constant_;
  std::vector<std::pair<std::size_t, std::vector<bool>>> by_time_;
};

struct EvalPoint {
  std::size_t index = 0;
  double t = 0.0;
  double fdp = 0.0;
  double fnp = 0.0;
};

struct EvalReport {
  std::vector<EvalPoint> points;
  double max_fdp = 0.0;
  double avg_fdp = 0.0;
  double max_fnp = 0.0;
  double avg_fnp = 0.0;
};

/// FDP = |H0 ∩ R| / max(|R|, 1); FNP = |non-nulls not rejected| / max(|non-nulls|, 1).
/// Summaries run over snapshots with lo < t < hi.
EvalReport evaluate(const NetworkSeries& series, const NullTruth& truth, double lo, double hi);

/// CSV of t, FDP, FNP rows followed by a summary row.
void write_evaluation_csv(const EvalReport& report, const std::filesystem::path& path);

/// r_g(t) = |V_g|^-1 |V|^-1 sum_{v1 in V_g} sum_{v2 in V} 1(edge(v1, v2)).
/// groups must partition [p].
std::vector<double> connection_proportion(const NetworkSnapshot& snapshot, std::size_t p,
                                          const std::vector<std::vector<std::size_t>>& groups);

}  // namespace tvcn
