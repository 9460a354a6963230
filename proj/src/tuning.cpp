#include "tvcn/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "parallel.hpp"
#include "smoother.hpp"

namespace tvcn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGridMultipliers[] = {0.6, 0.8, 1.0, 1.2, 1.4};
constexpr double kMaxBandwidthRatio = 5.0;

template <class T>
void require_grid(const std::vector<T>& grid, const char* name) {
  if (grid.size() < 3) throw UsageError(fmt::format("{} grid needs at least 3 candidates", name));
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw UsageError(fmt::format("{} grid must be strictly ascending", name));
  }
}

std::vector<std::size_t> rounded_grid(double centre) {
  std::vector<std::size_t> out;
  for (double mult : kGridMultipliers) {
    const auto v = static_cast<std::size_t>(std::lround(mult * centre));
    if (v >= 2 && (out.empty() || out.back() != v)) out.push_back(v);
  }
  return out;
}

double sample_sd(std::span<const double> values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

struct GcvTerms {
  double rss = 0.0;
  double trace = 0.0;
};

GcvTerms gcv_terms(const DifferencedPanel& diffs, std::span<const double> z, double b,
                   const Kernel& kernel) {
  const std::size_t n = diffs.n();
  const std::size_t first = diffs.first_index();
  const IndexRange window = evaluation_window(n, b);
  GcvTerms terms;
  for (std::size_t j = first; j <= n; ++j) {
    const auto kind = window.contains(j) ? detail::FitKind::local_linear : detail::FitKind::local_constant;
    const auto fit = detail::fit_on_grid(z, first, n, j, b, kernel, kind);
    const double r = z[j - first] - fit.level;
    terms.rss += r * r;
    terms.trace += fit.self_weight;
  }
  return terms;
}

std::vector<double> product_series(const DifferencedPanel& diffs, std::size_t i, std::size_t l) {
  std::vector<double> z(diffs.n() - diffs.lag());
  for (std::size_t j = diffs.first_index(); j <= diffs.n(); ++j) {
    z[j - diffs.first_index()] = diffs.at(j, i) * diffs.at(j, l);
  }
  return z;
}

}  // namespace

std::size_t default_lag(std::size_t n, double lag_factor) {
  return static_cast<std::size_t>(std::ceil(lag_factor * std::log(static_cast<double>(n))));
}

TuningConfig TuningConfig::defaults(std::size_t n, double lag_factor) {
  const double nd = static_cast<double>(n);
  TuningConfig cfg;
  cfg.h = default_lag(n, lag_factor);
  for (double mult : kGridMultipliers) {
    const double b = mult * std::pow(nd, -0.2);
    if (b < 0.5) cfg.bandwidths.push_back(b);
    const double eta = mult * std::pow(nd, -1.0 / 7.0);
    if (eta < 0.5) cfg.eta.push_back(eta);
  }
  cfg.w = rounded_grid(std::pow(nd, 0.4));
  cfg.m = rounded_grid(std::pow(nd, 2.0 / 7.0));
  cfg.m0 = static_cast<std::size_t>(std::floor(std::pow(nd, 2.0 / 7.0)));
  return cfg;
}

void TuningConfig::validate() const {
  require_grid(bandwidths, "bandwidth");
  require_grid(w, "w");
  require_grid(eta, "eta");
  require_grid(m, "m");
  for (double b : bandwidths) {
    if (!(b > 0.0 && b < 0.5)) throw UsageError(fmt::format("bandwidth candidate {} outside (0, 1/2)", b));
  }
  if (m0 < 2) throw UsageError("m0 must be at least 2");
}

double smoother_trace(const DifferencedPanel& diffs, double b, const Kernel& kernel) {
  const std::vector<double> zero(diffs.n() - diffs.lag(), 0.0);
  return gcv_terms(diffs, zero, b, kernel).trace;
}

GcvResult gcv_bandwidth(const DifferencedPanel& diffs, Pair pair, const std::vector<double>& grid,
                        const Kernel& kernel) {
  if (grid.empty()) throw UsageError("bandwidth grid is empty");
  const auto z = product_series(diffs, pair.i, pair.l);
  const double big_n = static_cast<double>(z.size());
  GcvResult result;
  double best = std::numeric_limits<double>::infinity();
  for (double b : grid) {
    GcvEntry entry{b, kNaN, kNaN};
    try {
      const auto terms = gcv_terms(diffs, z, b, kernel);
      entry.trace = terms.trace;
      const double ratio = terms.trace / big_n;
      if (ratio < 1.0) {
        const double denom = (1.0 - ratio) * (1.0 - ratio);
        entry.score = terms.rss / big_n / denom;
      }
    } catch (const Error&) {
      // infeasible candidate (too few points or degenerate weights): skipped
    }
    if (std::isfinite(entry.score) && entry.score < best) {
      best = entry.score;
      result.bandwidth = b;
    }
    result.table.push_back(entry);
  }
  if (!std::isfinite(best)) {
    throw Error(fmt::format("GCV: every bandwidth candidate skipped for pair ({}, {})", pair.i + 1,
                            pair.l + 1));
  }
  return result;
}

Matrix cap_bandwidth_ratio(const Matrix& chosen) {
  const auto data = chosen.data();
  const double cap = kMaxBandwidthRatio * *std::min_element(data.begin(), data.end());
  Matrix out = chosen;
  for (double& b : out.data()) b = std::min(b, cap);
  return out;
}

BandwidthSelection select_bandwidths(const DifferencedPanel& diffs, const std::vector<double>& grid,
                                     const Kernel& kernel, ExecPolicy policy) {
  const std::size_t p = diffs.p();
  std::vector<Pair> lower;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l <= i; ++l) lower.push_back({i, l});
  }
  BandwidthSelection sel;
  sel.per_pair.resize(lower.size());
  detail::for_each_index(lower.size(), policy, [&](std::size_t idx) {
    sel.per_pair[idx] = gcv_bandwidth(diffs, lower[idx], grid, kernel);
  });
  sel.chosen = Matrix(p, p);
  for (std::size_t idx = 0; idx < lower.size(); ++idx) {
    const auto [i, l] = lower[idx];
    sel.chosen(i, l) = sel.chosen(l, i) = sel.per_pair[idx].bandwidth;
  }
  Matrix capped = cap_bandwidth_ratio(sel.chosen);
  sel.capped = !(capped == sel.chosen);
  sel.bands.emplace(std::move(capped));
  return sel;
}

MvResult mv_from_table(const Matrix& s2) {
  const std::size_t rows = s2.rows();
  const std::size_t cols = s2.cols();
  if (rows < 3 || cols < 3) throw UsageError("minimum-volatility grid needs at least 3 x 3 cells");
  MvResult out;
  out.s2 = s2;
  out.mv = Matrix(rows, cols, kNaN);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<double> hood{s2(r, c)};
      if (c > 0) hood.push_back(s2(r, c - 1));
      if (c + 1 < cols) hood.push_back(s2(r, c + 1));
      if (r > 0) hood.push_back(s2(r - 1, c));
      if (r + 1 < rows) hood.push_back(s2(r + 1, c));
      if (hood.size() < 2) continue;
      const double sd = sample_sd(hood);
      out.mv(r, c) = sd;
      if (sd < best) {
        best = sd;
        out.w_index = r;
        out.eta_index = c;
      }
    }
  }
  if (!std::isfinite(best)) throw Error("minimum-volatility table has no finite cell");
  return out;
}

MvResult mv_select(CorrFieldEstimate& est, const BandwidthSet& bands, const TuningConfig& cfg,
                   const Kernel& kernel, ExecPolicy policy, MultiplierRange range,
                   MvStatistic statistic) {
  require_grid(cfg.w, "w");
  require_grid(cfg.eta, "eta");
  const auto pairs = hypothesis_pairs(est.p);
  Matrix s2(cfg.w.size(), cfg.eta.size());
  for (std::size_t c = 0; c < cfg.eta.size(); ++c) {
    attach_long_run_variance(est, LrvParams::uniform(est.p, cfg.m0, cfg.eta[c]), kernel, policy);
    const InnovationField xi(est, bands, kernel);
    for (std::size_t r = 0; r < cfg.w.size(); ++r) {
      const BlockSums sums = block_sums(xi, cfg.w[r], policy);
      double total = 0.0;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::size_t s_last = multiplier_s_last(sums, bands(pairs[k].i, pairs[k].l), range);
        for (std::size_t j = 1; j <= sums.starts(); ++j) {
          for (std::size_t s = sums.s_first(); s <= s_last; ++s) {
            const double v = sums.at(j, s, k);
            total += v * v;
          }
        }
      }
      if (statistic == MvStatistic::bootstrap_variance) {
        total /= 2.0 * static_cast<double>(sums.w) * static_cast<double>(sums.offset);
      }
      s2(r, c) = total;
    }
  }
  return mv_from_table(s2);
}

std::size_t refine_from_table(const std::vector<std::vector<double>>& gamma_by_m) {
  if (gamma_by_m.size() < 3) throw UsageError("m grid needs at least 3 candidates");
  const std::size_t points = gamma_by_m.front().size();
  if (points == 0) throw UsageError("long-run variance table is empty");
  std::size_t best_index = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 1; c + 1 < gamma_by_m.size(); ++c) {
    double sum = 0.0;
    for (std::size_t q = 0; q < points; ++q) {
      const double trio[] = {gamma_by_m[c - 1][q], gamma_by_m[c][q], gamma_by_m[c + 1][q]};
      sum += sample_sd(trio);
    }
    const double mean = sum / static_cast<double>(points);
    if (mean < best) {
      best = mean;
      best_index = c;
    }
  }
  return best_index;
}

std::size_t refine_m(const CorrFieldEstimate& est, std::size_t k, double eta,
                     const std::vector<std::size_t>& m_grid, const Kernel& kernel) {
  require_grid(m_grid, "m");
  std::vector<std::vector<double>> table;
  for (std::size_t m : m_grid) {
    const auto lrv = long_run_variance(est, k, m, eta, kernel);
    table.emplace_back(lrv.begin() + static_cast<std::ptrdiff_t>(est.window.first - 1),
                       lrv.begin() + static_cast<std::ptrdiff_t>(est.window.last));
  }
  return m_grid[refine_from_table(table)];
}

void write_tuning_report(const TuningReport& report, const TuningConfig& cfg,
                         const std::filesystem::path& path, bool verbose) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  const auto& labels = report.labels;
  const std::size_t p = labels.size();
  out << fmt::format("n = {}\nh = {}\n", report.n, report.h);
  out << fmt::format("bandwidth_source = {}\n", report.bandwidth_tuned ? "gcv" : "fixed");
  if (report.bandwidths.bands) {
    const auto& bands = *report.bandwidths.bands;
    out << fmt::format("bandwidth_capped = {}\n", report.bandwidths.capped);
    out << fmt::format("b_max = {}\n", bands.max());
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t l = 0; l <= i; ++l) {
        out << fmt::format("b[{},{}] = {}\n", labels[i], labels[l], bands(i, l));
      }
    }
  }
  out << fmt::format("w = {}\nw_source = {}\n", report.w, report.mv_tuned ? "mv" : "fixed");
  out << fmt::format("eta = {}\neta_source = {}\n", report.eta, report.mv_tuned ? "mv" : "fixed");
  out << fmt::format("m_source = {}\n", report.m_tuned ? "mv" : "fixed");
  const auto pairs = hypothesis_pairs(p);
  for (std::size_t k = 0; k < pairs.size() && k < report.m.size(); ++k) {
    out << fmt::format("m[{},{}] = {}\n", labels[pairs[k].i], labels[pairs[k].l], report.m[k]);
  }
  for (const auto& warning : report.warnings) out << "warning = " << warning << '\n';
  if (!verbose) return;

  out << "\n[gcv]\npair,bandwidth,trace,score\n";
  std::size_t idx = 0;
  for (std::size_t i = 0; i < p && !report.bandwidths.per_pair.empty(); ++i) {
    for (std::size_t l = 0; l <= i; ++l, ++idx) {
      for (const auto& e : report.bandwidths.per_pair[idx].table) {
        out << fmt::format("{}:{},{},{},{}\n", labels[i], labels[l], e.bandwidth, e.trace, e.score);
      }
    }
  }
  if (report.mv_tuned) {
    out << "\n[mv]\nw,eta,s2,mv\n";
    for (std::size_t r = 0; r < report.mv.s2.rows(); ++r) {
      for (std::size_t c = 0; c < report.mv.s2.cols(); ++c) {
        out << fmt::format("{},{},{},{}\n", cfg.w[r], cfg.eta[c], report.mv.s2(r, c), report.mv.mv(r, c));
      }
    }
  }
}

}  // namespace tvcn
