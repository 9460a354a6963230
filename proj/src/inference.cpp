#include "tvcn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include "json.hpp"

namespace tvcn {

std::string to_string(RuleKind kind) { return kind == RuleKind::BH ? "bh" : "by"; }

RuleKind parse_rule(const std::string& text) {
  if (text == "bh" || text == "BH") return RuleKind::BH;
  if (text == "by" || text == "BY") return RuleKind::BY;
  throw UsageError(fmt::format("unknown rule '{}' (expected bh or by)", text));
}

ThresholdRule::ThresholdRule(RuleKind kind, double alpha, std::size_t m)
    : kind_(kind), alpha_(alpha), m_(m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError(fmt::format("alpha = {} outside (0, 1)", alpha));
  if (m == 0) throw UsageError("threshold rule needs at least one hypothesis");
  if (kind == RuleKind::BY) divisor_ = std::log(static_cast<double>(m)) + kEulerGamma;
}

double ThresholdRule::operator()(std::size_t r) const {
  const double bh = alpha_ * static_cast<double>(r) / static_cast<double>(m_);
  return kind_ == RuleKind::BH ? bh : bh / divisor_;
}

std::vector<std::size_t> step_up(std::span<const double> pvalues, const ThresholdRule& rule) {
  if (pvalues.size() != rule.m()) {
    throw UsageError(fmt::format("{} P-values for a rule over {} hypotheses", pvalues.size(), rule.m()));
  }
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(fmt::format("P-value {} outside [0, 1]", p));
  }
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t count = 0;
  for (std::size_t r = sorted.size(); r >= 1; --r) {
    if (sorted[r - 1] <= rule(r)) {
      count = r;
      break;
    }
  }
  std::vector<std::size_t> rejected;
  if (count == 0) return rejected;
  const double cutoff = rule(count);
  for (std::size_t k = 0; k < pvalues.size(); ++k) {
    if (pvalues[k] <= cutoff) rejected.push_back(k);
  }
  return rejected;
}

NetworkSeries build_networks(const PValueField& field, const ThresholdRule& rule,
                             const std::vector<std::string>& labels) {
  const std::size_t p = labels.size();
  if (pair_count(p) != field.pairs()) throw UsageError("labels do not match the P-value field");
  const auto pairs = hypothesis_pairs(p);
  NetworkSeries series;
  series.n = field.n;
  series.p = p;
  series.labels = labels;
  series.alpha = rule.alpha();
  series.method = to_string(rule.kind());
  std::vector<double> pv(field.pairs());
  for (std::size_t j = field.window.first; j <= field.window.last; ++j) {
    for (std::size_t k = 0; k < pv.size(); ++k) pv[k] = field.value(k, j);
    NetworkSnapshot snap;
    snap.index = j;
    snap.t = grid_time(j, field.n);
    for (std::size_t k : step_up(pv, rule)) {
      snap.edges.push_back(pairs[k]);
      snap.max_rejected_pvalue = std::max(snap.max_rejected_pvalue.value_or(0.0), pv[k]);
    }
    series.snapshots.push_back(std::move(snap));
  }
  return series;
}

void write_networks_json(const NetworkSeries& series, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["n"] = series.n;
  doc["p"] = series.p;
  doc["alpha"] = series.alpha;
  doc["rule"] = series.method;
  doc["labels"] = series.labels;
  auto times = nlohmann::json::array();
  auto snaps = nlohmann::json::array();
  for (const auto& s : series.snapshots) {
    times.push_back(s.t);
    auto edges = nlohmann::json::array();
    for (const auto& e : s.edges) edges.push_back({e.i + 1, e.l + 1});
    nlohmann::json snap{{"t", s.t}, {"edges", edges}};
    snap["pvalues_rejected_max"] =
        s.max_rejected_pvalue ? nlohmann::json(*s.max_rejected_pvalue) : nlohmann::json(nullptr);
    snaps.push_back(std::move(snap));
  }
  doc["times"] = std::move(times);
  doc["snapshots"] = std::move(snaps);
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(1) << '\n';
}

NullTruth NullTruth::constant(std::vector<bool> is_null) {
  NullTruth truth;
  truth.constant_ = std::move(is_null);
  return truth;
}

void NullTruth::set(std::size_t j, std::vector<bool> is_null) {
  by_time_.emplace_back(j, std::move(is_null));
}

const std::vector<bool>* NullTruth::at(std::size_t j) const {
  for (const auto& [index, flags] : by_time_) {
    if (index == j) return &flags;
  }
  return constant_ ? &*constant_ : nullptr;
}

EvalReport evaluate(const NetworkSeries& series, const NullTruth& truth, double lo, double hi) {
  const std::size_t m = pair_count(series.p);
  EvalReport report;
  std::vector<bool> rejected(m);
  for (const auto& snap : series.snapshots) {
    if (!(snap.t > lo && snap.t < hi)) continue;
    const auto* is_null = truth.at(snap.index);
    if (is_null == nullptr || is_null->size() != m) {
      throw Error(fmt::format("no ground truth for t = {}", snap.t));
    }
    std::fill(rejected.begin(), rejected.end(), false);
    for (const auto& e : snap.edges) rejected[hypothesis_index(e.i, e.l)] = true;
    std::size_t false_rej = 0, total_rej = 0, non_null = 0, missed = 0;
    for (std::size_t k = 0; k < m; ++k) {
      total_rej += rejected[k];
      if ((*is_null)[k]) {
        false_rej += rejected[k];
      } else {
        ++non_null;
        missed += !rejected[k];
      }
    }
    EvalPoint point;
    point.index = snap.index;
    point.t = snap.t;
    point.fdp = static_cast<double>(false_rej) / static_cast<double>(std::max<std::size_t>(total_rej, 1));
    point.fnp = static_cast<double>(missed) / static_cast<double>(std::max<std::size_t>(non_null, 1));
    report.points.push_back(point);
  }
  if (report.points.empty()) {
    throw Error(fmt::format("no network snapshots inside ({}, {})", lo, hi));
  }
  double fdp_sum = 0.0, fnp_sum = 0.0;
  for (const auto& pt : report.points) {
    report.max_fdp = std::max(report.max_fdp, pt.fdp);
    report.max_fnp = std::max(report.max_fnp, pt.fnp);
    fdp_sum += pt.fdp;
    fnp_sum += pt.fnp;
  }
  const auto count = static_cast<double>(report.points.size());
  report.avg_fdp = fdp_sum / count;
  report.avg_fnp = fnp_sum / count;
  return report;
}

void write_evaluation_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "t,FDP,FNP\n";
  for (const auto& pt : report.points) out << fmt::format("{},{},{}\n", pt.t, pt.fdp, pt.fnp);
  out << fmt::format("max,{},{}\n", report.max_fdp, report.max_fnp);
  out << fmt::format("avg,{},{}\n", report.avg_fdp, report.avg_fnp);
}

std::vector<double> connection_proportion(const NetworkSnapshot& snapshot, std::size_t p,
                                          const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<int> owner(p, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw UsageError("connection groups must be non-empty");
    for (std::size_t v : groups[g]) {
      if (v >= p || owner[v] != -1) throw UsageError("connection groups must partition the nodes");
      owner[v] = static_cast<int>(g);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw UsageError("connection groups must cover every node");
  }
  std::vector<std::size_t> degree(p, 0);
  for (const auto& e : snapshot.edges) {
    ++degree[e.i];
    ++degree[e.l];
  }
  std::vector<double> out;
  for (const auto& group : groups) {
    std::size_t incident = 0;
    for (std::size_t v : group) incident += degree[v];
    out.push_back(static_cast<double>(incident) /
                  (static_cast<double>(group.size()) * static_cast<double>(p)));
  }
  return out;
}

}  // namespace tvcn
