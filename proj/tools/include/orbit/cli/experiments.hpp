#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "orbit/estimation.hpp"
#include "orbit/recovery.hpp"

namespace orbit::cli {

struct PipelineOptions {
  /// 0 uses the exact population moments.
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  EstimateOptions estimate;
  DemixOptions demix;
};

struct PipelineResult {
  std::vector<MomentTensor> moments;
  std::optional<MomentEstimate> estimate;
  RecoveryResult recovery;
  /// Component-wise solver results when K > 1.
  std::optional<DemixResult> demix;
  /// Best candidate as a K-component signal.
  Signal best;
  /// Orbit (or matched signal) distance of the best candidate to the truth.
  double distance = 0.0;
};

/// simulate -> estimate (streaming) -> demix when K > 1 -> solver by spec -> distance to truth.
PipelineResult run_pipeline(const ProblemSpec& spec, const Signal& truth, const NoiseModel& noise,
                            const PipelineOptions& options, Rng& rng);

struct SigmaScalingOptions {
  ProblemSpec spec;  // sigma is replaced per cell
  Signal truth;
  std::vector<double> sigmas;
  std::vector<std::int64_t> n_grid;
  double epsilon = 0.1;
  int trials = 20;
  /// Consecutive grid points with median distance < epsilon needed to accept n*.
  int confirm = 2;
  double delta = 1e-3;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct SigmaCell {
  double sigma = 0.0;
  /// First grid point of the first run of `confirm` successes.
  std::optional<std::int64_t> n_star;
  int blocks = 0;
  /// Median distance at each evaluated grid point (prefix of the grid).
  std::vector<double> median_distance;
  std::vector<double> success_fraction;
  [[nodiscard]] bool exhausted() const noexcept { return !n_star.has_value(); }
};

struct SigmaScalingResult {
  std::vector<SigmaCell> cells;
  /// Least-squares slope and intercept of log n* on log sigma over cells with n*.
  std::optional<double> slope;
  std::optional<double> intercept;
};

/// Every trial streams its own sample sequence once through the grid; the moment estimate
/// at grid point n is a snapshot of the same median-of-means accumulator (blocks fixed by
/// the largest grid point). Throws SpecError for fewer than two sigmas.
SigmaScalingResult sigma_scaling(const SigmaScalingOptions& options);

/// Least-squares fit y = slope * x + intercept.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace orbit::cli
