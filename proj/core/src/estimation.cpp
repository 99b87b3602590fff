#include "orbit/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "orbit/errors.hpp"

namespace orbit {

namespace {

void require_noise_order(const NoiseModel& noise, int order) {
  if (noise.max_order() < order) {
    throw SpecError("noise model needs moments up to order " + std::to_string(order));
  }
  if (noise.moments.empty() || noise.moments[0] != 1.0) throw SpecError("noise moment of order 0 must be 1");
}

/// Per-sample values sigma^e A_e(y / sigma) for e = 0..d, one row per coordinate.
class PowerTable {
 public:
  PowerTable(const NoiseModel& noise, double sigma, int d) : sigma_(sigma), d_(d) {
    if (sigma > 0.0) {
      const auto A = appell_polys(noise, d);
      // sigma^e A_e(y/sigma) = sum_i c_{e,i} sigma^{e-i} y^i
      scaled_.resize(static_cast<std::size_t>(d) + 1);
      for (int e = 0; e <= d; ++e) {
        auto& row = scaled_[static_cast<std::size_t>(e)];
        row.assign(static_cast<std::size_t>(e) + 1, 0.0);
        for (int i = 0; i <= e; ++i) row[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(e)][static_cast<std::size_t>(i)] * std::pow(sigma, e - i);
      }
    }
  }

  void fill(const Eigen::Ref<const Eigen::VectorXd>& y, std::vector<double>& out) const {
    const auto stride = static_cast<std::size_t>(d_) + 1;
    out.resize(static_cast<std::size_t>(y.size()) * stride);
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      double* row = out.data() + static_cast<std::size_t>(j) * stride;
      const double v = y[j];
      if (sigma_ == 0.0) {
        double pw = 1.0;
        for (int e = 0; e <= d_; ++e) {
          row[e] = pw;
          pw *= v;
        }
      } else {
        for (int e = 0; e <= d_; ++e) {
          const auto& c = scaled_[static_cast<std::size_t>(e)];
          double acc = 0.0;
          for (std::size_t i = c.size(); i-- > 0;) acc = acc * v + c[i];
          row[e] = acc;
        }
      }
    }
  }

  [[nodiscard]] int order() const noexcept { return d_; }

 private:
  double sigma_;
  int d_;
  std::vector<Coefficients> scaled_;
};

struct EntryPlan {
  // (coordinate, exponent) runs of a sorted multi-index
  std::vector<std::pair<int, int>> runs;
};

std::vector<EntryPlan> plan_entries(const std::vector<std::vector<int>>& indices) {
  std::vector<EntryPlan> out;
  out.reserve(indices.size());
  for (const auto& idx : indices) {
    EntryPlan p;
    for (int v : idx) {
      if (!p.runs.empty() && p.runs.back().first == v) {
        ++p.runs.back().second;
      } else {
        p.runs.emplace_back(v, 1);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

NoiseModel NoiseModel::gaussian(int d_max) {
  NoiseModel n;
  const int top = 2 * std::max(d_max, 0);
  n.moments.assign(static_cast<std::size_t>(top) + 1, 0.0);
  n.moments[0] = 1.0;
  for (int k = 2; k <= top; k += 2) n.moments[static_cast<std::size_t>(k)] = n.moments[static_cast<std::size_t>(k - 2)] * (k - 1);
  return n;
}

double evaluate_poly(const Coefficients& c, double x) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

std::vector<Coefficients> hermite_polys(const NoiseModel& noise, int k_max) {
  if (k_max < 0) throw SpecError("k_max must be nonnegative");
  require_noise_order(noise, 2 * k_max);
  const auto& m = noise.moments;
  // E[p(xi) q(xi)] from coefficient vectors
  auto inner = [&](const Coefficients& a, const Coefficients& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) acc += a[i] * b[j] * m[i + j];
    return acc;
  };
  std::vector<Coefficients> H;
  std::vector<double> norms;
  H.push_back({1.0});
  norms.push_back(1.0);
  for (int k = 1; k <= k_max; ++k) {
    Coefficients mono(static_cast<std::size_t>(k) + 1, 0.0);
    mono[static_cast<std::size_t>(k)] = 1.0;
    Coefficients h = mono;
    for (int j = 0; j < k; ++j) {
      const double c = inner(mono, H[static_cast<std::size_t>(j)]) / norms[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < H[static_cast<std::size_t>(j)].size(); ++i) h[i] -= c * H[static_cast<std::size_t>(j)][i];
    }
    const double nrm = inner(h, h);
    if (!(nrm > 1e-12 * std::max(1.0, std::abs(m[static_cast<std::size_t>(2 * k)])))) {
      throw SpecError("noise moment sequence is degenerate at order " + std::to_string(k));
    }
    H.push_back(std::move(h));
    norms.push_back(nrm);
  }
  return H;
}

std::vector<Coefficients> appell_polys(const NoiseModel& noise, int k_max) {
  if (k_max < 0) throw SpecError("k_max must be nonnegative");
  require_noise_order(noise, k_max);
  const auto& m = noise.moments;
  std::vector<double> b(static_cast<std::size_t>(k_max) + 1, 0.0);
  b[0] = 1.0;
  for (int n = 1; n <= k_max; ++n) {
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) acc += binomial(n, i) * m[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(n - i)];
    b[static_cast<std::size_t>(n)] = -acc;
  }
  std::vector<Coefficients> A;
  for (int k = 0; k <= k_max; ++k) {
    Coefficients c(static_cast<std::size_t>(k) + 1, 0.0);
    for (int j = 0; j <= k; ++j) c[static_cast<std::size_t>(k - j)] = binomial(k, j) * b[static_cast<std::size_t>(j)];
    A.push_back(std::move(c));
  }
  return A;
}

double median(std::vector<double> values) {
  if (values.empty()) throw SpecError("median of empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

int median_of_means_blocks(std::int64_t n, int q, int d, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw SpecError("delta must lie in (0, 1)");
  const double m = std::ceil(4.0 * std::log(binomial(q + d, d) / delta));
  return static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(n, static_cast<std::int64_t>(m))));
}

double raw_moment_estimate(const SampleSet& samples, const std::vector<int>& alpha, const NoiseModel& noise) {
  if (samples.n() == 0) throw SpecError("no samples");
  if (!std::is_sorted(alpha.begin(), alpha.end())) throw SpecError("multi-index must be sorted");
  const int d = static_cast<int>(alpha.size());
  const PowerTable table(noise, samples.sigma, d);
  const auto plan = plan_entries({alpha});
  std::vector<double> buf;
  double acc = 0.0;
  const auto stride = static_cast<std::size_t>(d) + 1;
  for (std::int64_t i = 0; i < samples.n(); ++i) {
    table.fill(samples.observations.row(i).transpose(), buf);
    double prod = 1.0;
    for (const auto& [v, e] : plan.front().runs) {
      if (v < 0 || v >= samples.q()) throw SpecError("multi-index out of range");
      prod *= buf[static_cast<std::size_t>(v) * stride + static_cast<std::size_t>(e)];
    }
    acc += prod;
  }
  return acc / static_cast<double>(samples.n());
}

struct StreamingMomentEstimator::State {
  SampleSource source;
  int q = 0;
  double sigma = 0.0;
  int m = 1;
  int threads = 1;
  std::vector<MomentTensor> shapes;
  // entry e multiplies buf[offsets[starts[e]] .. offsets[starts[e+1]-1]]
  std::vector<std::uint32_t> offsets, starts;
  std::size_t total = 0;
  PowerTable table;
  std::vector<std::vector<double>> sum, sq;
  std::vector<std::int64_t> count;
  std::int64_t consumed = 0;

  State(SampleSource src, int dim, double s, const NoiseModel& noise, int blocks, const EstimateOptions& options)
      : source(std::move(src)), q(dim), sigma(s), m(blocks), threads(std::max(1, options.threads)),
        table(noise, s, options.max_order) {
    const auto stride = static_cast<std::uint32_t>(options.max_order) + 1;
    starts.push_back(0);
    for (int order = 1; order <= options.max_order; ++order) {
      shapes.emplace_back(order, q);
      for (const auto& entry : plan_entries(shapes.back().multi_indices())) {
        for (const auto& [v, e] : entry.runs) offsets.push_back(static_cast<std::uint32_t>(v) * stride + static_cast<std::uint32_t>(e));
        starts.push_back(static_cast<std::uint32_t>(offsets.size()));
      }
      total += shapes.back().size();
    }
    sum.assign(static_cast<std::size_t>(m), std::vector<double>(total, 0.0));
    sq.assign(static_cast<std::size_t>(m), std::vector<double>(total, 0.0));
    count.assign(static_cast<std::size_t>(m), 0);
  }

  void run_block(int b, std::int64_t from, std::int64_t to) {
    Eigen::VectorXd y(q);
    std::vector<double> buf;
    double* s = sum[static_cast<std::size_t>(b)].data();
    double* s2 = sq[static_cast<std::size_t>(b)].data();
    const std::uint32_t* off = offsets.data();
    const std::uint32_t* st = starts.data();
    // first index >= from in residue class b
    std::int64_t i = from + ((b - from % m) % m + m) % m;
    for (; i < to; i += m) {
      source(i, y);
      table.fill(y, buf);
      const double* bv = buf.data();
      for (std::size_t pos = 0; pos < total; ++pos) {
        double prod = 1.0;
        for (std::uint32_t f = st[pos]; f < st[pos + 1]; ++f) prod *= bv[off[f]];
        s[pos] += prod;
        s2[pos] += prod * prod;
      }
      ++count[static_cast<std::size_t>(b)];
    }
  }
};

StreamingMomentEstimator::StreamingMomentEstimator(SampleSource source, int q, double sigma, const NoiseModel& noise,
                                                   int blocks, const EstimateOptions& options) {
  if (options.max_order < 1) throw SpecError("max_order must be at least 1");
  if (sigma < 0.0) throw SpecError("sigma must be nonnegative");
  if (blocks < 1) throw SpecError("block count must be positive");
  if (q < 1) throw SpecError("observation dimension must be positive");
  state_ = std::make_unique<State>(std::move(source), q, sigma, noise, blocks, options);
}

StreamingMomentEstimator::~StreamingMomentEstimator() = default;
StreamingMomentEstimator::StreamingMomentEstimator(StreamingMomentEstimator&&) noexcept = default;
StreamingMomentEstimator& StreamingMomentEstimator::operator=(StreamingMomentEstimator&&) noexcept = default;

std::int64_t StreamingMomentEstimator::consumed() const noexcept { return state_->consumed; }
int StreamingMomentEstimator::blocks() const noexcept { return state_->m; }

void StreamingMomentEstimator::advance_to(std::int64_t n) {
  State& st = *state_;
  if (n <= st.consumed) return;
  const std::int64_t from = st.consumed;
  const int threads = std::min(st.threads, st.m);
  if (threads == 1) {
    for (int b = 0; b < st.m; ++b) st.run_block(b, from, n);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&st, t, threads, from, n] {
        for (int b = t; b < st.m; b += threads) st.run_block(b, from, n);
      });
    }
  }
  st.consumed = n;
}

MomentEstimate StreamingMomentEstimator::snapshot() const {
  const State& st = *state_;
  if (st.consumed < st.m) throw PreconditionError("need at least as many samples as blocks");
  const std::int64_t n = st.consumed;
  MomentEstimate est;
  est.blocks = st.m;
  est.n = n;
  est.sigma = st.sigma;
  std::vector<double> block_means(static_cast<std::size_t>(st.m));
  std::size_t pos = 0;
  for (const auto& shape : st.shapes) {
    MomentTensor T = shape;
    std::vector<double> var(T.size());
    for (std::size_t e = 0; e < T.size(); ++e, ++pos) {
      double total_sum = 0.0, total_sq = 0.0;
      for (int b = 0; b < st.m; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        block_means[bi] = st.sum[bi][pos] / static_cast<double>(st.count[bi]);
        total_sum += st.sum[bi][pos];
        total_sq += st.sq[bi][pos];
      }
      T.values()[e] = st.m == 1 ? block_means[0] : median(block_means);
      const double mean = total_sum / static_cast<double>(n);
      var[e] = n > 1 ? std::max(0.0, (total_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1)) : 0.0;
    }
    T.provenance = Provenance::Estimated;
    T.samples = n;
    T.sigma = st.sigma;
    est.tensors.push_back(std::move(T));
    est.variance.push_back(std::move(var));
  }
  return est;
}

std::vector<MomentEstimate> estimate_moments_prefixes(const SampleSource& source,
                                                     const std::vector<std::int64_t>& checkpoints, int q,
                                                     double sigma, const NoiseModel& noise,
                                                     const EstimateOptions& options) {
  if (checkpoints.empty() || !std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw SpecError("checkpoints must be nonempty and ascending");
  }
  const int m = options.blocks > 0 ? options.blocks
                                   : median_of_means_blocks(checkpoints.back(), q, options.max_order, options.delta);
  if (checkpoints.front() < m) throw PreconditionError("need at least as many samples as blocks");
  StreamingMomentEstimator acc(source, q, sigma, noise, m, options);
  std::vector<MomentEstimate> out;
  for (std::int64_t c : checkpoints) {
    acc.advance_to(c);
    out.push_back(acc.snapshot());
  }
  return out;
}

MomentEstimate estimate_moments(const SampleSource& source, std::int64_t n, int q, double sigma,
                                const NoiseModel& noise, const EstimateOptions& options) {
  return std::move(estimate_moments_prefixes(source, {n}, q, sigma, noise, options).front());
}

MomentEstimate estimate_moments(const SampleSet& samples, const NoiseModel& noise, const EstimateOptions& options) {
  const auto& Y = samples.observations;
  return estimate_moments(
      [&Y](std::int64_t i, Eigen::Ref<Eigen::VectorXd> out) { out = Y.row(i).transpose(); }, samples.n(),
      samples.q(), samples.sigma, noise, options);
}

MomentEstimate estimate_moments_streaming(const ProblemSpec& spec, const Signal& theta, std::int64_t n,
                                          std::uint64_t seed, const NoiseModel& noise, const EstimateOptions& options) {
  const SampleGenerator gen(spec, theta, seed);
  return estimate_moments([&gen](std::int64_t i, Eigen::Ref<Eigen::VectorXd> out) { gen.sample(i, out); }, n,
                          gen.observed_dim(), spec.sigma, noise, options);
}

}  // namespace orbit
