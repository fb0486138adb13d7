// gmmdiag/kmeans.hpp
//
// Multi-threaded k-means used to initialise the mixture: seeding, squared
// Euclidean or diagonal Mahalanobis distance, hard-assignment iterations and
// dead-mean resurrection.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gmmdiag/dataset.hpp"

namespace gmmdiag {

enum class DistKind { kEuclSq, kMahaDiag };

class DistMode {
 public:
  static DistMode eucl_sq() { return DistMode(DistKind::kEuclSq, {}); }
  // inv_var holds reciprocals of the global per-dimension variances. Throws
  // std::invalid_argument unless every entry is finite and positive.
  static DistMode maha_diag(std::vector<double> inv_var);
  // Builds the mode for `kind`, estimating the global covariance from data
  // when kind is kMahaDiag.
  static DistMode for_data(DistKind kind, const Dataset& data, std::size_t n_threads = 1);

  DistKind kind() const noexcept { return kind_; }
  std::span<const double> inv_var() const noexcept { return inv_var_; }

  double operator()(const double* a, const double* b, std::size_t n_dims) const noexcept {
    double acc = 0.0;
    if (kind_ == DistKind::kEuclSq) {
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
      }
    } else {
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff * inv_var_[d];
      }
    }
    return acc;
  }

 private:
  DistMode(DistKind kind, std::vector<double> inv_var)
      : kind_(kind), inv_var_(std::move(inv_var)) {}

  DistKind kind_;
  std::vector<double> inv_var_;
};

enum class SeedMode { kKeepExisting, kStaticSubset, kRandomSubset, kStaticSpread, kRandomSpread };

// Floor on global variances, keeps the reciprocals finite.
inline constexpr double kGlobalVarFloor = 1e-300;

// Population (1/N) variance per dimension, floored at kGlobalVarFloor.
// Requires at least two samples.
std::vector<double> global_diag_cov(const Dataset& data, std::size_t n_threads = 1);

// Throws std::invalid_argument on a size mismatch or a mode whose inv_var
// does not match the vector length.
double dist(std::span<const double> a, std::span<const double> b, const DistMode& mode);

// Indices of the samples chosen as initial means:
//   kStaticSubset  floor(g * N_V / N_G)
//   kRandomSubset  N_G distinct uniform indices
//   kStaticSpread  farthest-point greedy from sample 0, ties to lowest index
//   kRandomSpread  k-means++ (D^2 sampling) from a uniform first pick
// Requires N_V >= n_gaus; kKeepExisting is rejected.
std::vector<std::size_t> seed_indices(const Dataset& data, std::size_t n_gaus, SeedMode mode,
                                      const DistMode& dist_mode, std::uint64_t rng_seed);

// The samples at seed_indices, flattened row-major (N_G x D).
std::vector<double> seed_means(const Dataset& data, std::size_t n_gaus, SeedMode mode,
                               const DistMode& dist_mode, std::uint64_t rng_seed);

struct KmState {
  static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

  // Fresh state for the given flat means; every sample unassigned.
  static KmState start(const Dataset& data, std::vector<double> means);

  std::size_t n_dims = 0;
  std::vector<double> means;           // N_G x D, row-major
  std::vector<std::size_t> counts;     // members per mean
  std::vector<std::size_t> assignment; // mean index per sample

  // Filled by kmeans_iterate: sum of distances from each sample to the mean
  // it was assigned to, and the number of samples whose assignment changed.
  double objective = 0.0;
  std::size_t n_changed = 0;

  std::size_t n_gaus() const noexcept { return n_dims == 0 ? 0 : means.size() / n_dims; }
  std::span<const double> mean(std::size_t g) const noexcept {
    return {means.data() + g * n_dims, n_dims};
  }
};

// One hard-assignment iteration: assign every sample to its nearest mean
// (ties to the lowest index), then move each mean to the average of its
// members. Means without members are left in place.
void kmeans_iterate(const Dataset& data, KmState& state, const DistMode& mode,
                    std::size_t n_threads = 1);

// Gives every mean that is dead on entry (count 0), in ascending order, the
// member of the currently most popular mean that lies farthest from it. The
// sample is reassigned and the counts updated. Returns the number of means
// resurrected.
std::size_t resurrect_dead_means(const Dataset& data, KmState& state, const DistMode& mode);

struct KmeansOptions {
  std::size_t max_iter = 10;
  std::size_t n_threads = 1;
  // Called after each iteration with (1-based iteration, objective).
  std::function<void(std::size_t, double)> on_iteration;
};

struct KmeansResult {
  KmState state;
  std::vector<double> objective_trace;  // one entry per iteration run
  std::size_t iterations = 0;
  std::size_t resurrections = 0;
  bool converged = false;               // stopped because nothing changed
};

// Runs up to max_iter iterations from the given means, resurrecting dead
// means after each pass and stopping early once no assignment changes.
KmeansResult run_kmeans(const Dataset& data, std::vector<double> initial_means,
                        const DistMode& mode, const KmeansOptions& options);

struct FitConfig;

// Seeds according to config.seed_mode (kKeepExisting is rejected), builds the
// distance from config.dist_mode and runs config.km_iter iterations.
KmeansResult run_kmeans(const Dataset& data, const FitConfig& config);

}  // namespace gmmdiag
