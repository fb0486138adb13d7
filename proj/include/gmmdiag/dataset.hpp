// gmmdiag/dataset.hpp

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gmmdiag {

// N_V samples of dimension D, stored sample-major: sample i occupies
// values()[i*D, (i+1)*D). All entries are finite.
class Dataset {
 public:
  Dataset() = default;

  // Throws std::invalid_argument when n_dims is zero, values.size() is not a
  // multiple of n_dims, or any entry is non-finite.
  Dataset(std::size_t n_dims, std::vector<double> values);

  static Dataset from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t n_samples() const noexcept { return n_dims_ == 0 ? 0 : values_.size() / n_dims_; }
  std::size_t n_dims() const noexcept { return n_dims_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> sample(std::size_t i) const noexcept {
    return {values_.data() + i * n_dims_, n_dims_};
  }
  std::span<const double> values() const noexcept { return values_; }

  // Copy of samples [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_dims_ = 0;
  std::vector<double> values_;
};

}  // namespace gmmdiag
