#include "tvcn/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "parallel.hpp"
#include "tvcn/rng.hpp"

namespace tvcn {

namespace {

constexpr std::size_t kReplicateChunk = 64;

void check_window(std::size_t n, std::size_t w, std::size_t offset) {
  if (w < 2 || w >= offset) {
    throw UsageError(fmt::format("block window w = {} outside [2, ceil(n b) = {})", w, offset));
  }
  if (2 * offset >= n) throw UsageError("bandwidth leaves no room for block sums");
}

InnovationSource source_of(const InnovationField& xi) {
  return [&xi](std::size_t j, std::size_t s, std::size_t k) { return xi(j, s, k); };
}

std::size_t offset_for(double b, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * b));
}

}  // namespace

std::size_t BlockSums::s_last_for(double b_pair) const {
  const std::size_t twice = 2 * offset_for(b_pair, n);
  if (twice < 2 * w) return w - 1;
  return std::min(s_last(), twice - w);
}

std::size_t multiplier_s_last(const BlockSums& sums, double b_pair, MultiplierRange range) {
  return range == MultiplierRange::global ? sums.s_last() : sums.s_last_for(b_pair);
}

BlockSums block_sums(const InnovationField& xi, std::size_t w, ExecPolicy policy) {
  return block_sums(xi.n(), offset_for(xi.bands().max(), xi.n()), xi.pairs(), source_of(xi), w, policy);
}

BlockSums block_sums(std::size_t n, std::size_t offset, std::size_t pairs, const InnovationSource& xi,
                     std::size_t w, ExecPolicy policy) {
  BlockSums sums;
  sums.n = n;
  sums.w = w;
  sums.offset = offset;
  check_window(n, w, offset);

  const std::size_t c = sums.offset;
  const std::size_t starts = sums.starts();
  const std::size_t width = sums.s_last() - sums.s_first() + 1;
  sums.values.assign(pairs, Matrix(starts, width));

  // One task per (pair, j) row; each block sum is an ascending loop, matching
  // the reference transcription operation for operation.
  detail::for_each_index(pairs * starts, policy, [&](std::size_t task) {
    const std::size_t k = task / starts;
    const std::size_t j = task % starts + 1;
    std::vector<double> v(2 * c + 1, 0.0);
    for (std::size_t a = 1; a <= 2 * c; ++a) v[a] = xi(a + j, c + j, k);
    // lead[s] = sum_{a=s-w+1}^{s} v[a] for s in [w, 2c].
    std::vector<double> lead(2 * c + 1, 0.0);
    for (std::size_t s = w; s <= 2 * c; ++s) {
      double acc = 0.0;
      for (std::size_t a = s - w + 1; a <= s; ++a) acc += v[a];
      lead[s] = acc;
    }
    auto row = sums.values[k].row(j - 1);
    for (std::size_t s = sums.s_first(); s <= sums.s_last(); ++s) {
      row[s - w] = lead[s] - lead[s + w];
    }
  });
  return sums;
}

Matrix bootstrap_multipliers(std::size_t n, std::size_t B, std::uint64_t seed) {
  Matrix r(B, n);
  for (std::size_t rep = 0; rep < B; ++rep) {
    for (std::size_t s = 0; s < n; ++s) r(rep, s) = counter_normal(seed, streams::bootstrap | rep, s);
  }
  return r;
}

BootstrapEnsemble draw_ensemble(const BlockSums& sums, const BandwidthSet& bands, std::size_t B,
                                std::uint64_t seed, ExecPolicy policy, MultiplierRange range) {
  if (B < 100) throw UsageError(fmt::format("bootstrap size B = {} below the minimum of 100", B));
  auto ens = draw_ensemble_with(sums, bands, bootstrap_multipliers(sums.n, B, seed), policy, range);
  ens.seed = seed;
  return ens;
}

BootstrapEnsemble draw_ensemble_with(const BlockSums& sums, const BandwidthSet& bands,
                                     const Matrix& multipliers, ExecPolicy policy,
                                     MultiplierRange range) {
  const std::size_t B = multipliers.rows();
  const std::size_t n = sums.n;
  if (multipliers.cols() != n) throw UsageError("multiplier matrix must have n columns");
  const auto pairs = hypothesis_pairs(bands.p());
  if (pairs.size() != sums.values.size()) throw UsageError("block sums do not match bandwidths");

  // Time-major copy so the replicate loop is contiguous.
  Matrix by_time(n, B);
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t s = 0; s < n; ++s) by_time(s, r) = multipliers(r, s);
  }

  const double denom = std::sqrt(2.0 * static_cast<double>(sums.w) * static_cast<double>(sums.offset));
  BootstrapEnsemble ens;
  ens.B = B;
  ens.z = Matrix(B, pairs.size());

  const std::size_t chunks = (B + kReplicateChunk - 1) / kReplicateChunk;
  detail::for_each_index(chunks, policy, [&](std::size_t chunk) {
    const std::size_t r0 = chunk * kReplicateChunk;
    const std::size_t len = std::min(kReplicateChunk, B - r0);
    std::vector<double> acc(len);
    std::vector<double> peak(len);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::size_t s_last = multiplier_s_last(sums, bands(pairs[k].i, pairs[k].l), range);
      std::fill(peak.begin(), peak.end(), 0.0);
      for (std::size_t j = 1; j <= sums.starts(); ++j) {
        const auto srow = sums.values[k].row(j - 1);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t s = sums.s_first(); s <= s_last; ++s) {
          const double coef = srow[s - sums.w];
          const double* rrow = by_time.row(j + s - 1).data() + r0;
          for (std::size_t r = 0; r < len; ++r) acc[r] += coef * rrow[r];
        }
        for (std::size_t r = 0; r < len; ++r) peak[r] = std::max(peak[r], std::abs(acc[r]));
      }
      for (std::size_t r = 0; r < len; ++r) ens.z(r0 + r, k) = peak[r] / denom;
    }
  });
  return ens;
}

StatisticField test_statistics(const CorrFieldEstimate& est, const BandwidthSet& bands) {
  if (!est.has_lrv()) throw UsageError("test statistics need the long-run variance");
  StatisticField out;
  out.n = est.n;
  out.window = est.window;
  const auto pairs = hypothesis_pairs(est.p);
  out.values.assign(pairs.size(), std::vector<double>(est.window.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, l] = pairs[k];
    const double root_nb = std::sqrt(static_cast<double>(est.n) * bands(i, l));
    for (std::size_t j = est.window.first; j <= est.window.last; ++j) {
      out.values[k][j - est.window.first] =
          root_nb * std::abs(est.rho(i, l, j)) / std::sqrt(est.lrv[k][j - 1]);
    }
  }
  return out;
}

PValueField pvalues(const StatisticField& stats, const BootstrapEnsemble& ens, ExecPolicy policy) {
  if (ens.z.cols() != stats.values.size()) throw UsageError("ensemble and statistics disagree on pairs");
  PValueField out;
  out.n = stats.n;
  out.B = ens.B;
  out.window = stats.window;
  out.exceed.assign(stats.values.size(), {});
  detail::for_each_index(stats.values.size(), policy, [&](std::size_t k) {
    std::vector<double> draws(ens.B);
    for (std::size_t r = 0; r < ens.B; ++r) draws[r] = ens.z(r, k);
    std::sort(draws.begin(), draws.end());
    auto& counts = out.exceed[k];
    counts.resize(stats.values[k].size());
    for (std::size_t idx = 0; idx < counts.size(); ++idx) {
      const auto first_above = std::upper_bound(draws.begin(), draws.end(), stats.values[k][idx]);
      counts[idx] = static_cast<std::uint32_t>(draws.end() - first_above);
    }
  });
  return out;
}

void write_ensemble_csv(const BootstrapEnsemble& ens, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "pair,replicate,z\n";
  for (std::size_t k = 0; k < ens.z.cols(); ++k) {
    for (std::size_t r = 0; r < ens.B; ++r) out << fmt::format("{},{},{}\n", k, r + 1, ens.z(r, k));
  }
}

void write_pvalues_csv(const PValueField& field, const std::vector<std::string>& labels,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "j,t";
  const auto pairs = hypothesis_pairs(labels.size());
  for (const auto& [i, l] : pairs) out << ',' << labels[i] << ':' << labels[l];
  out << '\n';
  for (std::size_t j = field.window.first; j <= field.window.last; ++j) {
    out << j << ',' << fmt::format("{}", grid_time(j, field.n));
    for (std::size_t k = 0; k < field.pairs(); ++k) out << ',' << fmt::format("{}", field.value(k, j));
    out << '\n';
  }
}

namespace reference {

BlockSums block_sums(const InnovationField& xi, std::size_t w) {
  return block_sums(xi.n(), offset_for(xi.bands().max(), xi.n()), xi.pairs(), source_of(xi), w);
}

BlockSums block_sums(std::size_t n, std::size_t offset, std::size_t pairs, const InnovationSource& xi,
                     std::size_t w) {
  BlockSums sums;
  sums.n = n;
  sums.w = w;
  sums.offset = offset;
  check_window(n, w, offset);
  const std::size_t c = sums.offset;
  sums.values.assign(pairs, Matrix(sums.starts(), sums.s_last() - sums.s_first() + 1));
  for (std::size_t k = 0; k < pairs; ++k) {
    for (std::size_t j = 1; j <= sums.starts(); ++j) {
      for (std::size_t s = w; s <= 2 * c - w; ++s) {
        double left = 0.0;
        for (std::size_t a = s - w + 1; a <= s; ++a) left += xi(a + j, c + j, k);
        double right = 0.0;
        for (std::size_t a = s + 1; a <= s + w; ++a) right += xi(a + j, c + j, k);
        sums.values[k](j - 1, s - w) = left - right;
      }
    }
  }
  return sums;
}

BootstrapEnsemble draw_ensemble_with(const BlockSums& sums, const BandwidthSet& bands,
                                     const Matrix& multipliers, MultiplierRange range) {
  const auto pairs = hypothesis_pairs(bands.p());
  BootstrapEnsemble ens;
  ens.B = multipliers.rows();
  ens.z = Matrix(ens.B, pairs.size());
  const double denom = std::sqrt(2.0 * static_cast<double>(sums.w) * static_cast<double>(sums.offset));
  for (std::size_t r = 0; r < ens.B; ++r) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, l] = pairs[k];
      const std::size_t s_last = multiplier_s_last(sums, bands(i, l), range);
      double best = 0.0;
      for (std::size_t j = 1; j <= sums.starts(); ++j) {
        double acc = 0.0;
        for (std::size_t s = sums.w; s <= s_last; ++s) {
          acc += sums.at(j, s, k) * multipliers(r, j + s - 1);
        }
        best = std::max(best, std::abs(acc));
      }
      ens.z(r, k) = best / denom;
    }
  }
  return ens;
}

PValueField pvalues(const StatisticField& stats, const BootstrapEnsemble& ens) {
  PValueField out;
  out.n = stats.n;
  out.B = ens.B;
  out.window = stats.window;
  for (std::size_t k = 0; k < stats.values.size(); ++k) {
    std::vector<std::uint32_t> counts;
    for (double t : stats.values[k]) {
      std::uint32_t count = 0;
      for (std::size_t r = 0; r < ens.B; ++r) count += t < ens.z(r, k) ? 1 : 0;
      counts.push_back(count);
    }
    out.exceed.push_back(std::move(counts));
  }
  return out;
}

}  // namespace reference

}  // namespace tvcn
