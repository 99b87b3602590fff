#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace orbit {

/// All non-decreasing index tuples of length `order` over [0, dim), lexicographic.
std::vector<std::vector<int>> sorted_multi_indices(int dim, int order);

/// Number of distinct orderings of a sorted multi-index.
std::uint64_t permutation_count(std::span<const int> sorted_index);

/// Binomial coefficient C(n, k) in double precision.
double binomial(int n, int k);

enum class Provenance { Exact, Estimated };

/// Symmetric order-d tensor over a q-dimensional space, stored once per
/// sorted multi-index.
class MomentTensor {
 public:
  MomentTensor() = default;
  MomentTensor(int order, int dim);

  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  [[nodiscard]] const std::vector<std::vector<int>>& multi_indices() const noexcept { return indices_; }
  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  /// Position of an index tuple given in any order.
  [[nodiscard]] std::size_t position(std::span<const int> index) const;
  [[nodiscard]] double at(std::span<const int> index) const { return values_[position(index)]; }
  double& at(std::span<const int> index) { return values_[position(index)]; }
  [[nodiscard]] double at(std::initializer_list<int> index) const {
    return at(std::span<const int>(index.begin(), index.size()));
  }
  double& at(std::initializer_list<int> index) { return at(std::span<const int>(index.begin(), index.size())); }

  /// Row-major expansion to dim^order entries.
  [[nodiscard]] std::vector<double> dense() const;

  Provenance provenance = Provenance::Exact;
  std::int64_t samples = 0;
  double sigma = 0.0;

 private:
  int order_ = 0;
  int dim_ = 0;
  std::vector<std::vector<int>> indices_;
  std::vector<double> values_;
  std::vector<std::uint32_t> lookup_;  // dense flat index -> position
};

}  // namespace orbit
