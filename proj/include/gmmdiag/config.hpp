// gmmdiag/config.hpp

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include "gmmdiag/kmeans.hpp"

namespace gmmdiag {

// Knobs for learn(): k-means seeding and iterations, then EM.
struct FitConfig {
  std::size_t n_gaus = 1;
  DistKind dist_mode = DistKind::kMahaDiag;
  SeedMode seed_mode = SeedMode::kRandomSubset;
  std::size_t km_iter = 10;
  std::size_t em_iter = 5;
  double var_floor = 1e-10;
  std::size_t n_threads = 1;
  std::uint64_t rng_seed = 0;
  // EM stops once the relative increase of the average log-likelihood
  // drops below this value.
  double em_rel_tol = 1e-10;
  // Per-iteration progress lines. Written to `progress`, or std::cerr when
  // progress is null.
  bool print_mode = false;
  std::ostream* progress = nullptr;

  // Throws std::invalid_argument on n_gaus == 0, n_threads == 0,
  // var_floor <= 0 or em_rel_tol < 0 (or non-finite values).
  void validate() const;
};

}  // namespace gmmdiag
