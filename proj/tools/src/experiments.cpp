#include "orbit/cli/experiments.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "orbit/cli/report.hpp"
#include "orbit/errors.hpp"

namespace orbit::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double best_candidate(const ProblemSpec& spec, const Signal& truth, const std::vector<Signal>& candidates,
                      Signal& best) {
  double dist = kInf;
  for (const auto& c : candidates) {
    const double d = signal_distance(spec, truth, c);
    if (d < dist) {
      dist = d;
      best = c;
    }
  }
  return dist;
}

}  // namespace

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw SpecError("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw SpecError("line fit needs distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

PipelineResult run_pipeline(const ProblemSpec& spec, const Signal& truth, const NoiseModel& noise,
                            const PipelineOptions& options, Rng& rng) {
  PipelineResult out;
  const int order = std::max(3, options.estimate.max_order);
  if (options.n == 0) {
    for (int d = 1; d <= 3; ++d) out.moments.push_back(exact_moment(spec, truth, d));
  } else {
    EstimateOptions est = options.estimate;
    est.max_order = order;
    out.estimate = estimate_moments_streaming(spec, truth, options.n, options.seed, noise, est);
    out.moments = out.estimate->tensors;
  }
  if (spec.heterogeneity == 1) {
    out.recovery = recover_from_moments(out.moments, spec, rng, options.demix.lsq);
    out.distance = best_candidate(spec, truth, out.recovery.candidates, out.best);
    return out;
  }
  out.demix = demix_then_recover(out.moments, spec, rng, options.demix);
  out.recovery = out.demix->mixed;
  Signal assembled;
  for (const auto& comp : out.demix->components) {
    if (comp.candidates.empty()) throw SolverError("a de-mixed component has no candidate");
    assembled.components.push_back(comp.candidates.front()[0]);
  }
  out.best = assembled;
  out.distance = signal_distance(spec, truth, assembled);
  return out;
}

SigmaScalingResult sigma_scaling(const SigmaScalingOptions& o) {
  if (o.sigmas.size() < 2) throw SpecError("sigma scaling needs at least two sigma values (slope undefined)");
  if (o.n_grid.empty()) throw SpecError("sigma scaling needs a nonempty n grid");
  if (o.trials < 1 || o.confirm < 1 || !(o.epsilon > 0)) throw SpecError("sigma scaling: bad trials/confirm/epsilon");
  const NoiseModel noise = NoiseModel::gaussian(3);
  const std::int64_t n_max = o.n_grid.back();
  SigmaScalingResult result;

  for (std::size_t si = 0; si < o.sigmas.size(); ++si) {
    const ProblemSpec spec = o.spec.with_sigma(o.sigmas[si]);
    SigmaCell cell;
    cell.sigma = o.sigmas[si];
    const int q = spec.observed_dim();
    cell.blocks = median_of_means_blocks(n_max, q, 3, o.delta);

    std::vector<std::uint64_t> trial_seeds;
    std::vector<std::shared_ptr<SampleGenerator>> generators;
    std::vector<StreamingMomentEstimator> estimators;
    for (int t = 0; t < o.trials; ++t) {
      Rng seeder(o.seed, (static_cast<std::uint64_t>(si) << 32) | static_cast<std::uint64_t>(t));
      trial_seeds.push_back(seeder.next_u64());
      auto gen = std::make_shared<SampleGenerator>(spec, o.truth, trial_seeds.back());
      generators.push_back(gen);
      estimators.emplace_back([gen](std::int64_t i, Eigen::Ref<Eigen::VectorXd> y) { gen->sample(i, y); }, q,
                              spec.sigma, noise, cell.blocks, EstimateOptions{.max_order = 3});
    }

    int run = 0;
    std::size_t run_start = 0;
    for (std::size_t j = 0; j < o.n_grid.size(); ++j) {
      const std::int64_t n = o.n_grid[j];
      if (n < cell.blocks) {
        cell.median_distance.push_back(kInf);
        cell.success_fraction.push_back(0.0);
        run = 0;
        continue;
      }
      std::vector<double> dist(static_cast<std::size_t>(o.trials), kInf);
      parallel_for(dist.size(), o.threads, [&](std::size_t t) {
        auto& est = estimators[t];
        est.advance_to(n);
        const auto snap = est.snapshot();
        Rng rng(trial_seeds[t], 0x7265'636f'7665'72ULL + j);
        try {
          const auto rec = recover_from_moments(snap.tensors, spec, rng);
          Signal best;
          dist[t] = best_candidate(spec, o.truth, rec.candidates, best);
        } catch (const Error&) {
          dist[t] = kInf;  // solver failure counts as a miss
        }
      });
      double hits = 0;
      for (double d : dist) hits += d < o.epsilon ? 1.0 : 0.0;
      cell.median_distance.push_back(median(dist));
      cell.success_fraction.push_back(hits / o.trials);
      if (cell.median_distance.back() < o.epsilon) {
        if (run == 0) run_start = j;
        if (++run >= o.confirm) {
          cell.n_star = o.n_grid[run_start];
          break;
        }
      } else {
        run = 0;
      }
    }
    result.cells.push_back(std::move(cell));
  }

  std::vector<double> lx, ly;
  for (const auto& c : result.cells) {
    if (c.n_star) {
      lx.push_back(std::log(c.sigma));
      ly.push_back(std::log(static_cast<double>(*c.n_star)));
    }
  }
  if (lx.size() >= 2) {
    const auto [slope, intercept] = fit_line(lx, ly);
    result.slope = slope;
    result.intercept = intercept;
  }
  return result;
}

}  // namespace orbit::cli
