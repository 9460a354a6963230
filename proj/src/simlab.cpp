#include "tvcn/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "parallel.hpp"
#include "tvcn/rng.hpp"

namespace tvcn {

namespace {

struct Breakpoints {
  double first;
  double second;
};

constexpr Breakpoints kBreakpoints[3] = {{0.25, 0.55}, {0.4, 0.7}, {0.55, 0.85}};

}  // namespace

void SimSpec::validate() const {
  if (case_id != 1 && case_id != 2) throw UsageError(fmt::format("unknown case {}", case_id));
  if (n < 300) throw UsageError(fmt::format("simulation needs n >= 300 (got {})", n));
  if (burn_in < 100) throw UsageError(fmt::format("burn-in {} below 100", burn_in));
  if (!(noise_scale >= 0.0)) throw UsageError("noise scale must be nonnegative");
}

std::size_t GroundTruth::nulls() const {
  return static_cast<std::size_t>(std::count(is_null.begin(), is_null.end(), true));
}

double GroundTruth::target_fdr(double alpha) const {
  return alpha * static_cast<double>(nulls()) / static_cast<double>(is_null.size());
}

double ar_coefficient(double t) { return 0.25 - 0.1 * (t - 0.5) * (t - 0.5); }

double mean_function(std::size_t i, double t) {
  const auto [a1, a2] = kBreakpoints[i % 3];
  if (t < a1) return 0.3 + 0.4 * t;
  if (t < a2) return 0.7 - 0.4 * t;
  return 0.2 + 0.4 * t;
}

Matrix innovation_mixing(std::size_t p) {
  if (p % 3 != 0) throw UsageError("mixing matrix needs p divisible by 3");
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t l = 0; l < p; ++l) {
      const double block = i / 3 == l / 3 ? 0.2 : 0.0;
      m(i, l) = (i == l ? 0.8 : 0.0) + block;
    }
  }
  return m;
}

GroundTruth ground_truth(std::size_t p) {
  GroundTruth truth;
  truth.p = p;
  for (const auto& [i, l] : hypothesis_pairs(p)) truth.is_null.push_back(i / 3 != l / 3);
  return truth;
}

SimulatedPanel simulate_case(const SimSpec& spec) {
  spec.validate();
  const std::size_t p = spec.p();
  const std::size_t n = spec.n;
  const Matrix mix = innovation_mixing(p);
  std::vector<double> state(p, 0.0), next(p), eta(p);
  Matrix values(n, p);

  const std::size_t steps = spec.burn_in + n;
  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t j = step < spec.burn_in ? 1 : step - spec.burn_in + 1;
    const double coef = ar_coefficient(spec.frozen_time.value_or(grid_time(j, n)));
    for (std::size_t i = 0; i < p; ++i) eta[i] = counter_normal(spec.seed, streams::simulation, step * p + i);
    for (std::size_t i = 0; i < p; ++i) {
      double shock = 0.0;
      for (std::size_t l = 0; l < p; ++l) shock += mix(i, l) * eta[l];
      next[i] = coef * state[i] + shock;
    }
    state.swap(next);
    if (step < spec.burn_in) continue;
    const double t = grid_time(j, n);
    for (std::size_t i = 0; i < p; ++i) {
      const double mu = spec.include_mean ? mean_function(i, t) : 0.0;
      values(j - 1, i) = mu + spec.noise_scale * state[i];
    }
  }
  return {TimeSeriesPanel(std::move(values)), ground_truth(p)};
}

std::size_t default_baseline_window(std::size_t n) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(n) / 10.0));
}

NetworkSeries moving_window_baseline(const TimeSeriesPanel& panel, std::size_t w, double threshold) {
  if (w < 5) throw UsageError(fmt::format("moving-window half-width {} below 5", w));
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw UsageError(fmt::format("threshold {} outside (0, 1]", threshold));
  }
  const std::size_t n = panel.n();
  const std::size_t p = panel.p();
  const auto pairs = hypothesis_pairs(p);
  NetworkSeries series;
  series.n = n;
  series.p = p;
  series.labels = panel.labels();
  series.method = fmt::format("moving-window({})", threshold);
  const double count = static_cast<double>(2 * w + 1);
  std::vector<double> mean(p), dev(p);
  for (std::size_t j = w + 1; j + w <= n; ++j) {
    NetworkSnapshot snap;
    snap.index = j;
    snap.t = grid_time(j, n);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t r = j - w; r <= j + w; ++r) {
      for (std::size_t i = 0; i < p; ++i) mean[i] += panel.at(r, i);
    }
    for (double& m : mean) m /= count;
    Matrix cross(p, p);
    for (std::size_t r = j - w; r <= j + w; ++r) {
      for (std::size_t i = 0; i < p; ++i) dev[i] = panel.at(r, i) - mean[i];
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t l = 0; l <= i; ++l) cross(i, l) += dev[i] * dev[l];
      }
    }
    for (const auto& pair : pairs) {
      const double denom = std::sqrt(cross(pair.i, pair.i) * cross(pair.l, pair.l));
      const double r = denom > 0.0 ? cross(pair.i, pair.l) / denom : 0.0;
      if (std::abs(r) > threshold) snap.edges.push_back(pair);
    }
    series.snapshots.push_back(std::move(snap));
  }
  return series;
}

std::string Method::name() const {
  switch (kind) {
    case MethodKind::bh: return "bh";
    case MethodKind::by: return "by";
    case MethodKind::moving_window: return fmt::format("moving_window_{}", threshold);
  }
  return "unknown";
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t rep) { return mix_seed(seed, rep); }

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.reps == 0) throw UsageError("an experiment needs at least one replication");
  if (spec.methods.empty()) throw UsageError("an experiment needs at least one method");
  spec.sim.validate();
  const bool needs_pipeline = std::any_of(spec.methods.begin(), spec.methods.end(), [](const Method& m) {
    return m.kind != MethodKind::moving_window;
  });

  ExperimentResult result;
  result.methods = spec.methods;
  result.reps.resize(spec.reps);
  // Replications run in parallel; kernels inside a replication stay serial.
  const ExecPolicy inner = spec.reps > 1 ? ExecPolicy::serial : spec.policy;

  detail::for_each_index(spec.reps, spec.reps > 1 ? spec.policy : ExecPolicy::serial, [&](std::size_t rep) {
    RepOutcome& out = result.reps[rep];
    out.rep = rep;
    out.seed = replication_seed(spec.seed, rep);
    try {
      SimSpec sim = spec.sim;
      sim.seed = out.seed;
      const SimulatedPanel data = simulate_case(sim);
      const NullTruth truth = data.truth.as_null_truth();
      std::optional<PipelineResult> pipe;
      if (needs_pipeline) {
        PipelineOptions opt = spec.pipeline;
        opt.seed = out.seed;
        opt.alpha = spec.alpha;
        opt.policy = inner;
        pipe.emplace(run_pipeline(data.panel, opt));
        if (spec.observer) spec.observer(rep, data, *pipe);
      }
      for (const Method& method : spec.methods) {
        NetworkSeries series;
        if (method.kind == MethodKind::moving_window) {
          const std::size_t w = method.window ? method.window : default_baseline_window(sim.n);
          series = moving_window_baseline(data.panel, w, method.threshold);
        } else {
          const RuleKind kind = method.kind == MethodKind::bh ? RuleKind::BH : RuleKind::BY;
          series = build_networks(pipe->pvalues, ThresholdRule(kind, spec.alpha, pair_count(sim.p())),
                                  pipe->labels);
        }
        out.reports.push_back(evaluate(series, truth, spec.lo, spec.hi));
      }
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      throw Error(fmt::format("replication {} (seed {}) failed: {}", rep, out.seed, e.what()));
    }
  });

  const double reps = static_cast<double>(spec.reps);
  for (std::size_t k = 0; k < spec.methods.size(); ++k) {
    Summary sum;
    std::map<std::size_t, TrajectoryPoint> traj;
    for (const auto& rep : result.reps) {
      const EvalReport& r = rep.reports[k];
      sum.max_fdp += r.max_fdp;
      sum.avg_fdp += r.avg_fdp;
      sum.max_fnp += r.max_fnp;
      sum.avg_fnp += r.avg_fnp;
      for (const auto& pt : r.points) {
        auto& tp = traj[pt.index];
        tp.t = pt.t;
        tp.mean_fdp += pt.fdp;
        tp.mean_fnp += pt.fnp;
        ++tp.count;
      }
    }
    sum.max_fdp /= reps;
    sum.avg_fdp /= reps;
    sum.max_fnp /= reps;
    sum.avg_fnp /= reps;
    std::vector<TrajectoryPoint> points;
    for (auto& [index, tp] : traj) {
      tp.mean_fdp /= static_cast<double>(tp.count);
      tp.mean_fnp /= static_cast<double>(tp.count);
      if (tp.t > spec.lo && tp.t < spec.hi) {
        sum.peak_fdp = std::max(sum.peak_fdp, tp.mean_fdp);
        sum.peak_fnp = std::max(sum.peak_fnp, tp.mean_fnp);
      }
      points.push_back(tp);
    }
    result.aggregate.push_back(sum);
    result.trajectory.push_back(std::move(points));
  }
  return result;
}

ExperimentResult sensitivity_run(ExperimentSpec spec, Perturbation kind, double delta) {
  if (!(delta > -1.0)) throw UsageError("perturbation must keep parameters positive");
  switch (kind) {
    case Perturbation::none: break;
    case Perturbation::bandwidth: spec.pipeline.bandwidth_factor *= 1.0 + delta; break;
    case Perturbation::lag:
      spec.pipeline.h.reset();
      spec.pipeline.lag_factor *= 1.0 + delta;
      break;
  }
  return run_experiment(spec);
}

void write_experiment_csv(const ExperimentResult& result, std::size_t method,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "rep,maxFDP,avgFDP,maxFNP,avgFNP\n";
  for (const auto& rep : result.reps) {
    const auto& r = rep.reports.at(method);
    out << fmt::format("{},{},{},{},{}\n", rep.rep + 1, r.max_fdp, r.avg_fdp, r.max_fnp, r.avg_fnp);
  }
  const auto& s = result.aggregate.at(method);
  out << fmt::format("mean,{},{},{},{}\n", s.max_fdp, s.avg_fdp, s.max_fnp, s.avg_fnp);
}

void write_trajectory_csv(const ExperimentResult& result, std::size_t method,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "t,meanFDP,meanFNP\n";
  for (const auto& pt : result.trajectory.at(method)) {
    out << fmt::format("{},{},{}\n", pt.t, pt.mean_fdp, pt.mean_fnp);
  }
}

void write_line_chart_svg(const std::string& title, const std::vector<ChartSeries>& series,
                          const std::filesystem::path& path) {
  constexpr double width = 640, height = 400, margin = 50;
  constexpr const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = 1e-12;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };

  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)", width, height) << '\n';
  out << fmt::format(R"(<text x="{}" y="20" text-anchor="middle">{}</text>)", width / 2, title) << '\n';
  out << fmt::format(R"(<rect x="{0}" y="{0}" width="{1}" height="{2}" fill="none" stroke="#444"/>)",
                     margin, width - 2 * margin, height - 2 * margin) << '\n';
  out << fmt::format(R"(<text x="{}" y="{}">{:.3g}</text>)", 4, py(y1) + 4, y1) << '\n';
  out << fmt::format(R"(<text x="{}" y="{}">{:.3g}</text>)", 4, py(y0) + 4, y0) << '\n';
  out << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{:.3g}</text>)", px(x0), height - 30, x0) << '\n';
  out << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{:.3g}</text>)", px(x1), height - 30, x1) << '\n';
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = colours[k % 5];
    out << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.5" points=")", colour);
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out << fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    out << "\"/>\n";
    out << fmt::format(R"(<text x="{}" y="{}" fill="{}">{}</text>)", width - margin - 120,
                       margin + 16 * (k + 1), colour, s.name) << '\n';
  }
  out << "</svg>\n";
}

}  // namespace tvcn
