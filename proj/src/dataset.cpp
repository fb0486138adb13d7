// gmmdiag/dataset.cpp

#include "gmmdiag/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gmmdiag {

Dataset::Dataset(std::size_t n_dims, std::vector<double> values)
    : n_dims_(n_dims), values_(std::move(values)) {
  if (n_dims_ == 0) throw std::invalid_argument("Dataset: n_dims must be positive");
  if (values_.size() % n_dims_ != 0) {
    throw std::invalid_argument("Dataset: " + std::to_string(values_.size()) +
                                " values is not a multiple of " + std::to_string(n_dims_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("Dataset: non-finite entry in sample " +
                                  std::to_string(i / n_dims_));
    }
  }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("Dataset: no rows");
  const std::size_t n_dims = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * n_dims);
  for (const auto& row : rows) {
    if (row.size() != n_dims) throw std::invalid_argument("Dataset: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Dataset(n_dims, std::move(values));
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n_samples()) throw std::out_of_range("Dataset::slice");
  return Dataset(n_dims_, std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * n_dims_),
                                              values_.begin() + static_cast<std::ptrdiff_t>(end * n_dims_)));
}

}  // namespace gmmdiag
