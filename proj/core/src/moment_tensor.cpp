#include "orbit/moment_tensor.hpp"

#include <algorithm>
#include <cmath>

#include "orbit/errors.hpp"

namespace orbit {

std::vector<std::vector<int>> sorted_multi_indices(int dim, int order) {
  std::vector<std::vector<int>> out;
  if (order == 0) {
    out.emplace_back();
    return out;
  }
  if (dim <= 0) return out;
  std::vector<int> cur(static_cast<std::size_t>(order), 0);
  for (;;) {
    out.push_back(cur);
    int pos = order - 1;
    while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == dim - 1) --pos;
    if (pos < 0) break;
    const int next = cur[static_cast<std::size_t>(pos)] + 1;
    for (int j = pos; j < order; ++j) cur[static_cast<std::size_t>(j)] = next;
  }
  return out;
}

std::uint64_t permutation_count(std::span<const int> idx) {
  std::uint64_t n = 1;
  for (std::size_t i = 2; i <= idx.size(); ++i) n *= i;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t run = 1;
    while (i + run < idx.size() && idx[i + run] == idx[i]) ++run;
    for (std::size_t f = 2; f <= run; ++f) n /= f;
    i += run;
  }
  return n;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

MomentTensor::MomentTensor(int order, int dim)
    : order_(order), dim_(dim), indices_(sorted_multi_indices(dim, order)) {
  if (order < 0 || dim < 0) throw SpecError("moment tensor needs nonnegative order and dimension");
  values_.assign(indices_.size(), 0.0);
  std::size_t full = 1;
  for (int i = 0; i < order; ++i) full *= static_cast<std::size_t>(dim);
  if (full > (std::size_t{1} << 26)) throw SpecError("moment tensor too large for index lookup");
  lookup_.assign(full, 0);
  // fill every permutation of every sorted index
  for (std::size_t pos = 0; pos < indices_.size(); ++pos) {
    std::vector<int> perm = indices_[pos];
    do {
      std::size_t flat = 0;
      for (int v : perm) flat = flat * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v);
      lookup_[flat] = static_cast<std::uint32_t>(pos);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

std::size_t MomentTensor::position(std::span<const int> index) const {
  if (static_cast<int>(index.size()) != order_) throw SpecError("moment index has wrong order");
  std::size_t flat = 0;
  for (int v : index) {
    if (v < 0 || v >= dim_) throw SpecError("moment index out of range");
    flat = flat * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(v);
  }
  return lookup_[flat];
}

std::vector<double> MomentTensor::dense() const {
  std::vector<double> out(lookup_.size());
  for (std::size_t i = 0; i < lookup_.size(); ++i) out[i] = values_[lookup_[i]];
  return out;
}

}  // namespace orbit
