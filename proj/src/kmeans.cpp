// gmmdiag/kmeans.cpp

#include "gmmdiag/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "gmmdiag/config.hpp"
#include "gmmdiag/parallel.hpp"

namespace gmmdiag {

DistMode DistMode::maha_diag(std::vector<double> inv_var) {
  if (inv_var.empty()) throw std::invalid_argument("maha_diag: empty inverse variances");
  for (double v : inv_var) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw std::invalid_argument("maha_diag: inverse variances must be finite and positive");
    }
  }
  return DistMode(DistKind::kMahaDiag, std::move(inv_var));
}

DistMode DistMode::for_data(DistKind kind, const Dataset& data, std::size_t n_threads) {
  if (kind == DistKind::kEuclSq) return eucl_sq();
  auto var = global_diag_cov(data, n_threads);
  for (double& v : var) v = 1.0 / v;
  return maha_diag(std::move(var));
}

std::vector<double> global_diag_cov(const Dataset& data, std::size_t n_threads) {
  const std::size_t n = data.n_samples();
  if (n < 2) throw std::invalid_argument("global_diag_cov: at least two samples are required");
  const std::size_t n_dims = data.n_dims();
  const BlockGrid grid(n);

  // Two passes: mean, then squared deviations. Block partials are summed in
  // ascending block order.
  std::vector<double> partial(grid.n_blocks() * n_dims, 0.0);
  for_each_block(grid, n_threads, [&](std::size_t b) {
    double* acc = partial.data() + b * n_dims;
    for (std::size_t i = grid.block(b).begin; i < grid.block(b).end; ++i) {
      const double* x = data.sample(i).data();
      for (std::size_t d = 0; d < n_dims; ++d) acc[d] += x[d];
    }
  });
  std::vector<double> mean(n_dims, 0.0);
  for (std::size_t b = 0; b < grid.n_blocks(); ++b) {
    for (std::size_t d = 0; d < n_dims; ++d) mean[d] += partial[b * n_dims + d];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  std::fill(partial.begin(), partial.end(), 0.0);
  for_each_block(grid, n_threads, [&](std::size_t b) {
    double* acc = partial.data() + b * n_dims;
    for (std::size_t i = grid.block(b).begin; i < grid.block(b).end; ++i) {
      const double* x = data.sample(i).data();
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double diff = x[d] - mean[d];
        acc[d] += diff * diff;
      }
    }
  });
  std::vector<double> var(n_dims, 0.0);
  for (std::size_t b = 0; b < grid.n_blocks(); ++b) {
    for (std::size_t d = 0; d < n_dims; ++d) var[d] += partial[b * n_dims + d];
  }
  for (double& v : var) v = std::max(v / static_cast<double>(n), kGlobalVarFloor);
  return var;
}

double dist(std::span<const double> a, std::span<const double> b, const DistMode& mode) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dist: vectors have " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " dimensions");
  }
  if (mode.kind() == DistKind::kMahaDiag && mode.inv_var().size() != a.size()) {
    throw std::invalid_argument("dist: Mahalanobis variances do not match the dimensionality");
  }
  return mode(a.data(), b.data(), a.size());
}

namespace {

void check_distance_mode(const Dataset& data, const DistMode& mode) {
  if (mode.kind() == DistKind::kMahaDiag && mode.inv_var().size() != data.n_dims()) {
    throw std::invalid_argument("Mahalanobis variances do not match the dataset dimensionality");
  }
}

// Updates min_dist[i] = min(min_dist[i], dist(x_i, seed)) over all samples.
void update_min_dist(const Dataset& data, const double* seed, const DistMode& mode,
                     std::vector<double>& min_dist) {
  const std::size_t n_dims = data.n_dims();
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    const double d = mode(data.sample(i).data(), seed, n_dims);
    if (d < min_dist[i]) min_dist[i] = d;
  }
}

std::size_t lowest_unchosen(const std::vector<bool>& chosen) {
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (!chosen[i]) return i;
  }
  return chosen.size();
}

}  // namespace

std::vector<std::size_t> seed_indices(const Dataset& data, std::size_t n_gaus, SeedMode mode,
                                      const DistMode& dist_mode, std::uint64_t rng_seed) {
  const std::size_t n = data.n_samples();
  if (n_gaus == 0) throw std::invalid_argument("seed: n_gaus must be positive");
  if (n < n_gaus) {
    throw std::invalid_argument("seed: " + std::to_string(n) + " samples cannot seed " +
                                std::to_string(n_gaus) + " means");
  }
  check_distance_mode(data, dist_mode);

  std::vector<std::size_t> out;
  out.reserve(n_gaus);
  std::mt19937_64 rng(rng_seed);

  switch (mode) {
    case SeedMode::kKeepExisting:
      throw std::invalid_argument("seed: keep-existing does not select samples");

    case SeedMode::kStaticSubset:
      for (std::size_t g = 0; g < n_gaus; ++g) out.push_back(g * n / n_gaus);
      return out;

    case SeedMode::kRandomSubset: {
      // Partial Fisher-Yates shuffle.
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t g = 0; g < n_gaus; ++g) {
        std::uniform_int_distribution<std::size_t> pick(g, n - 1);
        std::swap(idx[g], idx[pick(rng)]);
        out.push_back(idx[g]);
      }
      return out;
    }

    case SeedMode::kStaticSpread:
    case SeedMode::kRandomSpread: {
      const bool random = mode == SeedMode::kRandomSpread;
      std::vector<bool> chosen(n, false);
      std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());

      std::size_t first = 0;
      if (random) first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      out.push_back(first);
      chosen[first] = true;
      update_min_dist(data, data.sample(first).data(), dist_mode, min_dist);

      while (out.size() < n_gaus) {
        std::size_t next = n;
        if (!random) {
          double best = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i] && min_dist[i] > best) {
              best = min_dist[i];
              next = i;
            }
          }
        } else {
          double total = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i]) total += min_dist[i];
          }
          if (total > 0.0 && std::isfinite(total)) {
            const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              if (chosen[i] || min_dist[i] <= 0.0) continue;
              cum += min_dist[i];
              next = i;
              if (r < cum) break;
            }
          }
        }
        // Every remaining sample coincides with a chosen seed.
        if (next == n) next = lowest_unchosen(chosen);
        out.push_back(next);
        chosen[next] = true;
        update_min_dist(data, data.sample(next).data(), dist_mode, min_dist);
      }
      return out;
    }
  }
  throw std::invalid_argument("seed: unknown seed mode");
}

std::vector<double> seed_means(const Dataset& data, std::size_t n_gaus, SeedMode mode,
                               const DistMode& dist_mode, std::uint64_t rng_seed) {
  const auto idx = seed_indices(data, n_gaus, mode, dist_mode, rng_seed);
  std::vector<double> means;
  means.reserve(n_gaus * data.n_dims());
  for (std::size_t i : idx) {
    auto x = data.sample(i);
    means.insert(means.end(), x.begin(), x.end());
  }
  return means;
}

KmState KmState::start(const Dataset& data, std::vector<double> means) {
  if (data.n_dims() == 0) throw std::invalid_argument("KmState: empty dataset");
  if (means.empty() || means.size() % data.n_dims() != 0) {
    throw std::invalid_argument("KmState: means do not match the dataset dimensionality");
  }
  KmState s;
  s.n_dims = data.n_dims();
  s.means = std::move(means);
  s.counts.assign(s.n_gaus(), 0);
  s.assignment.assign(data.n_samples(), kUnassigned);
  return s;
}

void kmeans_iterate(const Dataset& data, KmState& state, const DistMode& mode,
                    std::size_t n_threads) {
  const std::size_t n = data.n_samples();
  const std::size_t n_dims = data.n_dims();
  const std::size_t n_gaus = state.n_gaus();
  if (n == 0) throw std::invalid_argument("kmeans_iterate: empty dataset");
  if (state.n_dims != n_dims || state.assignment.size() != n || state.counts.size() != n_gaus ||
      n_gaus == 0) {
    throw std::invalid_argument("kmeans_iterate: state does not match the dataset");
  }
  check_distance_mode(data, mode);

  const BlockGrid grid(n);
  const std::size_t n_blocks = grid.n_blocks();
  std::vector<double> sums(n_blocks * n_gaus * n_dims, 0.0);
  std::vector<std::size_t> counts(n_blocks * n_gaus, 0);
  std::vector<double> objective(n_blocks, 0.0);
  std::vector<std::size_t> changed(n_blocks, 0);

  for_each_block(grid, n_threads, [&](std::size_t b) {
    double* block_sums = sums.data() + b * n_gaus * n_dims;
    std::size_t* block_counts = counts.data() + b * n_gaus;
    double obj = 0.0;
    std::size_t n_changed = 0;
    for (std::size_t i = grid.block(b).begin; i < grid.block(b).end; ++i) {
      const double* x = data.sample(i).data();
      std::size_t best = 0;
      double best_dist = mode(x, state.means.data(), n_dims);
      for (std::size_t g = 1; g < n_gaus; ++g) {
        const double d = mode(x, state.means.data() + g * n_dims, n_dims);
        if (d < best_dist) {
          best_dist = d;
          best = g;
        }
      }
      if (state.assignment[i] != best) ++n_changed;
      state.assignment[i] = best;
      obj += best_dist;
      ++block_counts[best];
      double* s = block_sums + best * n_dims;
      for (std::size_t d = 0; d < n_dims; ++d) s[d] += x[d];
    }
    objective[b] = obj;
    changed[b] = n_changed;
  });

  std::vector<double> total_sums(n_gaus * n_dims, 0.0);
  std::fill(state.counts.begin(), state.counts.end(), 0);
  state.objective = 0.0;
  state.n_changed = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t k = 0; k < n_gaus * n_dims; ++k) total_sums[k] += sums[b * n_gaus * n_dims + k];
    for (std::size_t g = 0; g < n_gaus; ++g) state.counts[g] += counts[b * n_gaus + g];
    state.objective += objective[b];
    state.n_changed += changed[b];
  }
  for (std::size_t g = 0; g < n_gaus; ++g) {
    if (state.counts[g] == 0) continue;
    const double inv = 1.0 / static_cast<double>(state.counts[g]);
    for (std::size_t d = 0; d < n_dims; ++d) {
      state.means[g * n_dims + d] = total_sums[g * n_dims + d] * inv;
    }
  }
}

std::size_t resurrect_dead_means(const Dataset& data, KmState& state, const DistMode& mode) {
  const std::size_t n = data.n_samples();
  if (n == 0) throw std::invalid_argument("resurrect_dead_means: empty dataset");
  if (state.assignment.size() != n || state.n_dims != data.n_dims()) {
    throw std::invalid_argument("resurrect_dead_means: state does not match the dataset");
  }
  check_distance_mode(data, mode);
  const std::size_t n_dims = data.n_dims();
  const std::size_t n_gaus = state.n_gaus();

  std::vector<std::size_t> dead;
  for (std::size_t g = 0; g < n_gaus; ++g) {
    if (state.counts[g] == 0) dead.push_back(g);
  }

  std::size_t revived = 0;
  for (std::size_t g : dead) {
    const auto popular = static_cast<std::size_t>(
        std::max_element(state.counts.begin(), state.counts.end()) - state.counts.begin());
    if (state.counts[popular] == 0) {
      throw std::invalid_argument("resurrect_dead_means: no mean has any members");
    }
    // A donor with a single member cannot give it up without dying itself;
    // that is still done, and the donor is revived on the next pass.
    const double* centre = state.means.data() + popular * n_dims;
    std::size_t donor = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state.assignment[i] != popular) continue;
      const double d = mode(data.sample(i).data(), centre, n_dims);
      if (d > far) {
        far = d;
        donor = i;
      }
    }
    auto x = data.sample(donor);
    std::copy(x.begin(), x.end(), state.means.begin() + static_cast<std::ptrdiff_t>(g * n_dims));
    state.assignment[donor] = g;
    --state.counts[popular];
    ++state.counts[g];
    ++revived;
  }
  return revived;
}

KmeansResult run_kmeans(const Dataset& data, std::vector<double> initial_means,
                        const DistMode& mode, const KmeansOptions& options) {
  KmeansResult result;
  result.state = KmState::start(data, std::move(initial_means));
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    kmeans_iterate(data, result.state, mode, options.n_threads);
    const std::size_t revived = resurrect_dead_means(data, result.state, mode);
    result.resurrections += revived;
    result.iterations = it;
    result.objective_trace.push_back(result.state.objective);
    if (options.on_iteration) options.on_iteration(it, result.state.objective);
    if (result.state.n_changed == 0 && revived == 0) {
      result.converged = true;
      break;
    }
  }
  return result;
}

KmeansResult run_kmeans(const Dataset& data, const FitConfig& config) {
  config.validate();
  if (config.seed_mode == SeedMode::kKeepExisting) {
    throw std::invalid_argument("run_kmeans: keep-existing needs explicit initial means");
  }
  const DistMode mode = DistMode::for_data(config.dist_mode, data, config.n_threads);
  auto means = seed_means(data, config.n_gaus, config.seed_mode, mode, config.rng_seed);
  KmeansOptions options;
  options.max_iter = config.km_iter;
  options.n_threads = config.n_threads;
  return run_kmeans(data, std::move(means), mode, options);
}

}  // namespace gmmdiag
