#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "orbit/moment_tensor.hpp"
#include "orbit/problem.hpp"

namespace orbit {

/// Scalar noise law described by its raw moments E[xi^k].
struct NoiseModel {
  std::vector<double> moments;  // k = 0..2 d_max

  /// Standard normal moments up to order 2 d_max: 1, 0, 1, 0, 3, 0, 15, ...
  static NoiseModel gaussian(int d_max);
  [[nodiscard]] int max_order() const noexcept { return static_cast<int>(moments.size()) - 1; }
};

/// Polynomial coefficients, lowest degree first.
using Coefficients = std::vector<double>;

/// Monic orthogonal polynomials H_0..H_kmax under the noise law (Gram-Schmidt on monomials).
/// Throws SpecError when the moment sequence is not realizable to that order.
std::vector<Coefficients> hermite_polys(const NoiseModel& noise, int k_max);

/// Polynomials A_k with E[A_k(x + xi)] = x^k (generating function e^{xt} / E e^{t xi}).
/// They coincide with hermite_polys for Gaussian noise.
std::vector<Coefficients> appell_polys(const NoiseModel& noise, int k_max);

double evaluate_poly(const Coefficients& c, double x);

/// Unbiased estimate of E[x^alpha] from one sample set; alpha is a sorted multi-index.
double raw_moment_estimate(const SampleSet& samples, const std::vector<int>& alpha, const NoiseModel& noise);

struct EstimateOptions {
  int max_order = 3;
  double delta = 1e-3;
  /// 0 picks min(n, ceil(4 ln(C(q+d, d) / delta))); 1 is the plain mean.
  int blocks = 0;
  int threads = 1;
};

/// Block count rule min(n, ceil(4 ln(C(q+d,d)/delta))).
int median_of_means_blocks(std::int64_t n, int q, int d, double delta);

struct MomentEstimate {
  std::vector<MomentTensor> tensors;  // orders 1..d
  /// Per-entry sample variance of the single-sample unbiased terms.
  std::vector<std::vector<double>> variance;
  int blocks = 0;
  std::int64_t n = 0;
  double sigma = 0.0;
};

/// Sample i is written into `out` (size q).
using SampleSource = std::function<void(std::int64_t, Eigen::Ref<Eigen::VectorXd>)>;

/// Median-of-means estimate over n samples pulled from `source`. Block b holds the
/// samples with index = b mod blocks; results do not depend on `threads`.
MomentEstimate estimate_moments(const SampleSource& source, std::int64_t n, int q, double sigma,
                                const NoiseModel& noise, const EstimateOptions& options = {});

/// Estimates over the prefixes of sizes `checkpoints` (ascending) in one pass. The block
/// count is fixed by the largest prefix, so prefix k equals estimate_moments on its first
/// checkpoints[k] samples with the same `blocks`.
std::vector<MomentEstimate> estimate_moments_prefixes(const SampleSource& source,
                                                     const std::vector<std::int64_t>& checkpoints, int q,
                                                     double sigma, const NoiseModel& noise,
                                                     const EstimateOptions& options = {});

MomentEstimate estimate_moments(const SampleSet& samples, const NoiseModel& noise,
                                const EstimateOptions& options = {});

/// Resumable median-of-means accumulator. Sample i always lands in block i mod blocks and
/// each block is summed in index order, so snapshots do not depend on `threads` or on how
/// the stream was split into advance_to calls.
class StreamingMomentEstimator {
 public:
  StreamingMomentEstimator(SampleSource source, int q, double sigma, const NoiseModel& noise, int blocks,
                           const EstimateOptions& options = {});
  ~StreamingMomentEstimator();
  StreamingMomentEstimator(StreamingMomentEstimator&&) noexcept;
  StreamingMomentEstimator& operator=(StreamingMomentEstimator&&) noexcept;

  /// Consumes samples [consumed(), n).
  void advance_to(std::int64_t n);
  [[nodiscard]] std::int64_t consumed() const noexcept;
  [[nodiscard]] int blocks() const noexcept;
  /// Estimate over the samples consumed so far; needs consumed() >= blocks().
  [[nodiscard]] MomentEstimate snapshot() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Simulates and estimates without storing the samples.
MomentEstimate estimate_moments_streaming(const ProblemSpec& spec, const Signal& theta, std::int64_t n,
                                          std::uint64_t seed, const NoiseModel& noise,
                                          const EstimateOptions& options = {});

/// Median of a copy of the values.
double median(std::vector<double> values);

}  // namespace orbit
