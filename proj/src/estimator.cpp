#include "tvcn/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "parallel.hpp"
#include "smoother.hpp"

namespace tvcn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxCondition = 1e12;
constexpr double kMinVariance = 1e-12;
constexpr std::size_t kMinPoints = 5;

struct WeightedSums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double t0 = 0.0, t1 = 0.0;
  std::size_t count = 0;

  void add(double w, double d, double z) {
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * z;
    t1 += w * d * z;
  }
};

double condition_number(const WeightedSums& s) {
  const double half_trace = 0.5 * (s.s0 + s.s2);
  const double radius = std::hypot(0.5 * (s.s0 - s.s2), s.s1);
  const double big = std::max(std::abs(half_trace + radius), std::abs(half_trace - radius));
  const double small = std::min(std::abs(half_trace + radius), std::abs(half_trace - radius));
  return small > 0.0 ? big / small : std::numeric_limits<double>::infinity();
}

void require_well_posed(const WeightedSums& s, double t) {
  if (s.count < kMinPoints) {
    throw Error(fmt::format("local-linear fit at t = {}: only {} points within the bandwidth", t,
                            s.count));
  }
  if (condition_number(s) > kMaxCondition) {
    throw Error(fmt::format("local-linear fit at t = {}: singular normal equations", t));
  }
}

}  // namespace

namespace detail {

GridFit fit_on_grid(std::span<const double> z, std::size_t first, std::size_t n, std::size_t j,
                    double b, const Kernel& kernel, FitKind kind) {
  const double nd = static_cast<double>(n);
  // Largest integer offset r with r / n < b.
  const auto reach = static_cast<std::size_t>(std::max(0.0, std::ceil(nd * b) - 1.0));
  const std::size_t lo = j > first + reach ? j - reach : first;
  const std::size_t hi = std::min(n, j + reach);

  WeightedSums s;
  for (std::size_t jj = lo; jj <= hi; ++jj) {
    const double d = (static_cast<double>(jj) - static_cast<double>(j)) / nd;
    s.add(kernel.scaled(d, b), d, z[jj - first]);
  }
  s.count = hi >= lo ? hi - lo + 1 : 0;
  const double t = grid_time(j, n);
  const double k0 = kernel(0.0);

  if (kind == FitKind::local_constant) {
    if (s.count < kMinPoints || !(s.s0 > 0.0)) {
      throw Error(fmt::format("local-constant fit at t = {}: degenerate kernel weights", t));
    }
    return {s.t0 / s.s0, k0 / s.s0};
  }
  require_well_posed(s, t);
  const double det = s.s0 * s.s2 - s.s1 * s.s1;
  return {(s.s2 * s.t0 - s.s1 * s.t1) / det, k0 * s.s2 / det};
}

}  // namespace detail

LocalLinearFit local_linear_fit(std::span<const double> times, std::span<const double> z,
                                double t, double b, const Kernel& kernel) {
  if (times.size() != z.size()) throw UsageError("local_linear_fit: times and values differ in length");
  if (!(b > 0.0)) throw UsageError("local_linear_fit: bandwidth must be positive");
  WeightedSums s;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(z[k])) throw Error(fmt::format("local_linear_fit: non-finite value at {}", k));
    const double d = times[k] - t;
    if (std::abs(d) < b) ++s.count;
    s.add(kernel.scaled(d, b), d, z[k]);
  }
  require_well_posed(s, t);
  const double det = s.s0 * s.s2 - s.s1 * s.s1;
  return {(s.s2 * s.t0 - s.s1 * s.t1) / det, (s.s0 * s.t1 - s.s1 * s.t0) / det};
}

BandwidthSet::BandwidthSet(Matrix bandwidths) : b_(std::move(bandwidths)) {
  const std::size_t p = b_.rows();
  if (p < 2 || b_.cols() != p) throw UsageError("bandwidth matrix must be square with p >= 2");
  double b_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l < p; ++l) {
      const double b = b_(i, l);
      if (!(b > 0.0 && b < 0.5)) {
        throw UsageError(fmt::format("bandwidth b[{},{}] = {} outside (0, 1/2)", i, l, b));
      }
      if (b != b_(l, i)) throw UsageError("bandwidth matrix must be symmetric");
      b_min = std::min(b_min, b);
      b_max_ = std::max(b_max_, b);
    }
  }
  if (b_min / b_max_ < 0.2) {
    throw UsageError(fmt::format("bandwidth ratio min/max = {} below 0.2", b_min / b_max_));
  }
  c_ = Matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l < p; ++l) c_(i, l) = std::sqrt(b_max_ / b_(i, l));
  }
}

BandwidthSet BandwidthSet::uniform(std::size_t p, double b) { return BandwidthSet(Matrix(p, p, b)); }

BandwidthSet BandwidthSet::scaled(double factor) const {
  Matrix m = b_;
  for (double& v : m.data()) v *= factor;
  return BandwidthSet(std::move(m));
}

LrvParams LrvParams::uniform(std::size_t p, std::size_t m, double eta) {
  return {std::vector<std::size_t>(pair_count(p), m), eta};
}

IndexRange evaluation_window(std::size_t n, double b_max) {
  const auto offset = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * b_max));
  if (2 * offset >= n) throw UsageError("bandwidth leaves an empty evaluation window");
  return {offset, n - offset};
}

std::size_t CorrFieldEstimate::nearest_index(double t) const {
  const double j = std::round(t * static_cast<double>(n));
  return static_cast<std::size_t>(std::clamp(j, 1.0, static_cast<double>(n)));
}

CorrFieldEstimate estimate_moments(const DifferencedPanel& diffs, const BandwidthSet& bands,
                                   const Kernel& kernel, ExecPolicy policy) {
  const std::size_t n = diffs.n();
  const std::size_t h = diffs.lag();
  const std::size_t p = diffs.p();
  if (bands.p() != p) throw UsageError("bandwidth matrix dimension does not match the panel");

  CorrFieldEstimate est;
  est.n = n;
  est.h = h;
  est.p = p;
  est.window = evaluation_window(n, bands.max());
  if (est.window.first <= h) {
    throw UsageError(fmt::format("evaluation window starts at {} but differences start at {}",
                                 est.window.first, h + 1));
  }
  std::vector<Pair> lower;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l <= i; ++l) lower.push_back({i, l});
  }
  est.fields.resize(lower.size());

  // Local fits of the product series, one task per pair (diagonal included).
  detail::for_each_index(lower.size(), policy, [&](std::size_t idx) {
    const auto [i, l] = lower[idx];
    std::vector<double> z(n - h);
    for (std::size_t j = h + 1; j <= n; ++j) z[j - h - 1] = diffs.at(j, i) * diffs.at(j, l);

    PairField& f = est.fields[idx];
    f.beta.assign(n, kNaN);
    f.gamma.assign(n, kNaN);
    f.resid.assign(n, kNaN);
    const double b = bands(i, l);
    for (std::size_t j = h + 1; j <= n; ++j) {
      const auto kind = est.window.contains(j) ? detail::FitKind::local_linear
                                               : detail::FitKind::local_constant;
      const double beta = detail::fit_on_grid(z, h + 1, n, j, b, kernel, kind).level;
      f.beta[j - 1] = beta;
      f.gamma[j - 1] = beta / 2.0;
      f.resid[j - 1] = z[j - h - 1] - beta;
    }
  });

  for (std::size_t i = 0; i < p; ++i) {
    const auto& gamma = est.field(i, i).gamma;
    for (std::size_t j = h + 1; j <= n; ++j) {
      if (!(gamma[j - 1] >= kMinVariance)) {
        throw Error(fmt::format("marginal variance nonpositive for series {} at t = {} ({})", i + 1,
                                grid_time(j, n), gamma[j - 1]));
      }
    }
  }

  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l <= i; ++l) {
      PairField& f = est.fields[lower_index(i, l)];
      f.sigma.assign(n, kNaN);
      f.rho.assign(n, kNaN);
      const auto& gi = est.field(i, i).gamma;
      const auto& gl = est.field(l, l).gamma;
      for (std::size_t j = h + 1; j <= n; ++j) {
        if (i == l) {
          f.sigma[j - 1] = f.gamma[j - 1];
          f.rho[j - 1] = 1.0;
        } else {
          f.sigma[j - 1] = std::sqrt(gi[j - 1] * gl[j - 1]);
          f.rho[j - 1] = f.gamma[j - 1] / f.sigma[j - 1];
        }
      }
    }
  }

  const auto pairs = hypothesis_pairs(p);
  est.xi_tilde.assign(pairs.size(), {});
  est.xi_hat.assign(pairs.size(), {});
  detail::for_each_index(pairs.size(), policy, [&](std::size_t k) {
    const auto [i, l] = pairs[k];
    const PairField& f = est.field(i, l);
    const PairField& fi = est.field(i, i);
    const PairField& fl = est.field(l, l);
    auto& xt = est.xi_tilde[k];
    auto& xh = est.xi_hat[k];
    xt.assign(n, 0.0);
    xh.assign(n, 0.0);
    for (std::size_t j = h + 1; j <= n; ++j) {
      const std::size_t r = j - 1;
      const double yi = diffs.at(j, i);
      const double yl = diffs.at(j, l);
      const double half_rho = f.rho[r] / 4.0;
      xt[r] = yi * yl / (2.0 * f.sigma[r]) -
              half_rho * (yi * yi / fi.gamma[r] + yl * yl / fl.gamma[r]);
      xh[r] = f.resid[r] / (2.0 * f.sigma[r]) -
              half_rho * (fi.resid[r] / fi.gamma[r] + fl.resid[r] / fl.gamma[r]);
    }
  });
  return est;
}

std::vector<double> long_run_variance(const CorrFieldEstimate& est, std::size_t k,
                                      std::size_t m, double eta, const Kernel& kernel) {
  const std::size_t n = est.n;
  const std::size_t h = est.h;
  if (m < 2 || 4 * m > n) throw UsageError(fmt::format("block length m = {} outside [2, n/4]", m));
  if (!(eta > 0.0 && eta < 0.5)) throw UsageError(fmt::format("eta = {} outside (0, 1/2)", eta));

  const auto& xi = est.xi_hat[k];
  const std::size_t s_first = h + 1;
  const std::size_t s_last = n - m + 1;
  std::vector<double> delta_sq(n, 0.0);
  for (std::size_t s = s_first; s <= s_last; ++s) {
    double sum = 0.0;
    for (std::size_t j = s; j < s + m; ++j) sum += xi[j - 1];
    delta_sq[s - 1] = sum * sum;
  }

  const double nd = static_cast<double>(n);
  const double scale = kernel.kappa() / static_cast<double>(m);
  std::vector<double> out(n, kNaN);
  for (std::size_t q = est.window.first; q <= est.window.last; ++q) {
    double denom = 0.0;
    double num = 0.0;
    for (std::size_t s = 1; s <= n; ++s) {
      const double w = kernel.scaled((static_cast<double>(s) - static_cast<double>(q)) / nd, eta);
      denom += w;
      if (s >= s_first && s <= s_last) num += delta_sq[s - 1] * w;
    }
    const double value = scale * num / denom;
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw Error(fmt::format("long-run variance nonpositive at t = {} (pair {})", grid_time(q, n), k));
    }
    out[q - 1] = value;
  }
  return out;
}

void attach_long_run_variance(CorrFieldEstimate& est, const LrvParams& params,
                              const Kernel& kernel, ExecPolicy policy) {
  const std::size_t pairs = pair_count(est.p);
  if (params.blocks.size() != pairs) throw UsageError("one block length per pair required");
  est.lrv.assign(pairs, {});
  detail::for_each_index(pairs, policy, [&](std::size_t k) {
    est.lrv[k] = long_run_variance(est, k, params.blocks[k], params.eta, kernel);
  });
}

CorrFieldEstimate estimate_corr_field(const DifferencedPanel& diffs, const BandwidthSet& bands,
                                      const Kernel& kernel, const LrvParams& params,
                                      ExecPolicy policy) {
  CorrFieldEstimate est = estimate_moments(diffs, bands, kernel, policy);
  attach_long_run_variance(est, params, kernel, policy);
  return est;
}

InnovationField::InnovationField(const CorrFieldEstimate& est, const BandwidthSet& bands,
                                 const Kernel& kernel)
    : est_(&est), bands_(&bands), kernel_(&kernel), pairs_(hypothesis_pairs(est.p)) {
  if (!est.has_lrv()) throw UsageError("standardized innovations need the long-run variance");
  inv_gamma_.assign(pairs_.size(), std::vector<double>(est.n, kNaN));
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    for (std::size_t q = est.window.first; q <= est.window.last; ++q) {
      inv_gamma_[k][q - 1] = 1.0 / std::sqrt(est.lrv[k][q - 1]);
    }
  }
}

double InnovationField::operator()(std::size_t j, std::size_t s, std::size_t k) const {
  const auto [i, l] = pairs_[k];
  const double b = (*bands_)(i, l);
  const double d = (static_cast<double>(j) - static_cast<double>(s)) / static_cast<double>(est_->n);
  const double w = kernel_->scaled(d, b);
  if (w == 0.0) return 0.0;
  return bands_->scale(i, l) * w * est_->xi_tilde[k][j - 1] * inv_gamma_[k][s - 1];
}

InnovationField standardized_innovations(const CorrFieldEstimate& est, const BandwidthSet& bands,
                                         const Kernel& kernel) {
  return InnovationField(est, bands, kernel);
}

void write_estimates_csv(const CorrFieldEstimate& est, const std::vector<std::string>& labels,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "i,l,label_i,label_l,j,t,beta,gamma,sigma,rho,lrv\n";
  const auto pairs = hypothesis_pairs(est.p);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, l] = pairs[k];
    const PairField& f = est.field(i, l);
    for (std::size_t j = est.window.first; j <= est.window.last; ++j) {
      const double lrv = est.has_lrv() ? est.lrv[k][j - 1] : kNaN;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", i + 1, l + 1, labels[i], labels[l], j,
                         grid_time(j, est.n), f.beta[j - 1], f.gamma[j - 1], f.sigma[j - 1],
                         f.rho[j - 1], lrv);
    }
  }
}

}  // namespace tvcn
