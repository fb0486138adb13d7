// gmmdiag/em.hpp
//
// Expectation-Maximisation for diagonal GMMs in map/reduce form: each block
// of samples produces Accumulators (sum of responsibilities, responsibility
// weighted sums of x and of x squared), the blocks are reduced in ascending
// order and the new parameters are formed from the moments:
//
//   L_g     = sum l_g
//   mean_g  = sum l_g x / L_g
//   dcov_g  = sum l_g x^2 / L_g - mean_g^2   (floored at var_floor)
//   heft_g  = L_g / N_V

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gmmdiag/config.hpp"
#include "gmmdiag/dataset.hpp"
#include "gmmdiag/model.hpp"
#include "gmmdiag/parallel.hpp"

namespace gmmdiag {

struct Accumulators {
  Accumulators() = default;
  Accumulators(std::size_t n_gaus, std::size_t n_dims)
      : n_gaus(n_gaus), n_dims(n_dims), occupancy(n_gaus, 0.0),
        sum_x(n_gaus * n_dims, 0.0), sum_xx(n_gaus * n_dims, 0.0) {}

  std::size_t n_gaus = 0;
  std::size_t n_dims = 0;
  std::vector<double> occupancy;  // per Gaussian: sum of responsibilities
  std::vector<double> sum_x;      // N_G x D: sum of l * x
  std::vector<double> sum_xx;     // N_G x D: sum of l * x * x (elementwise)
  double log_p_sum = 0.0;         // sum of log p(x) over the chunk
  std::size_t n_samples = 0;

  // Elementwise this += other.
  void add(const Accumulators& other);

  friend bool operator==(const Accumulators&, const Accumulators&) = default;
};

// Posterior probability of each Gaussian given x. Zero-heft Gaussians get
// exactly 0. Throws DegeneratePointError when every term underflows and
// std::invalid_argument on a dimension mismatch.
std::vector<double> responsibilities(std::span<const double> x, const GmmModel& model);

// Left-to-right accumulation over samples [range.begin, range.end).
Accumulators accumulate_chunk(const Dataset& data, Range range, const GmmModel& model);

// Relative occupancy below which a Gaussian is treated as degenerate and its
// mean and covariance are kept from the previous model.
inline constexpr double kDegenerateOccupancy = 1e-12;

// Reduces `accs` in the given order and forms the updated model. Throws
// FitError when every Gaussian is degenerate.
GmmModel reduce_and_update(std::span<const Accumulators> accs, const GmmModel& previous,
                           double var_floor, std::size_t n_samples);

// One full E+M pass over the block grid with n_threads workers. The
// reduced accumulators are returned through `reduced` when non-null.
GmmModel em_step(const Dataset& data, const GmmModel& model, double var_floor,
                 std::size_t n_threads, Accumulators* reduced = nullptr);

enum class Phase { kKmeans, kEm };

struct TraceEntry {
  Phase phase;
  std::size_t iteration;  // 1-based within the phase
  double value;           // k-means objective, or average log-likelihood
  double elapsed_ms;      // since the start of the phase
};

struct FitReport {
  std::vector<TraceEntry> trace;
  double initial_avg_log_p = 0.0;  // model handed to EM, before any update
  double final_avg_log_p = 0.0;
  double km_seconds = 0.0;
  double em_seconds = 0.0;
  std::size_t km_iterations = 0;
  std::size_t em_iterations = 0;
  std::size_t resurrections = 0;
  bool converged = false;          // EM stopped on em_rel_tol
  std::vector<std::string> warnings;

  // EM-phase values in order.
  std::vector<double> em_trace() const;
};

struct FitResult {
  GmmModel model;
  FitReport report;
};

// Up to config.em_iter EM iterations from `init`. Trace entry k holds the
// average log-likelihood of the model after update k. Stops early when the
// relative increase falls below config.em_rel_tol.
FitResult em_fit(const Dataset& data, const GmmModel& init, const FitConfig& config);

// Full training pipeline: seeding, k-means, initial GMM, EM. With
// seed_mode == kKeepExisting, `existing` is refined by EM directly and must
// match the data dimensionality and config.n_gaus.
FitResult learn(const Dataset& data, const FitConfig& config, const GmmModel& existing = {});

// Initial GMM from a k-means result: hefts from the counts (floored at
// 1/(100 N_G), renormalised), per-cluster variances around the k-means
// means (clusters with fewer than two members use global_var), floored at
// var_floor.
GmmModel init_from_kmeans(const Dataset& data, const KmState& state,
                          std::span<const double> global_var, double var_floor,
                          std::size_t n_threads = 1);

}  // namespace gmmdiag
