// gmmdiag/synthetic.hpp
//
// Synthetic datasets for demos, tests and benchmarks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gmmdiag/dataset.hpp"
#include "gmmdiag/model.hpp"

namespace gmmdiag {

// Two 5-D unit-variance clusters: centre A = (1,2,3,4,5) and centre B =
// A + 2. Samples cycle A, A, B, so two thirds come from A.
inline constexpr std::size_t kFig1Dims = 5;
Dataset make_fig1_dataset(std::size_t n, std::uint64_t rng_seed);
GmmModel fig1_true_model();

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Model with dcov = stddev^2. Throws ValidationError on inconsistent shapes,
// negative weights, non-positive stddevs, or weights not summing to 1.
GmmModel model_from_components(const std::vector<MixtureComponent>& components);

// generate(model_from_components(components), n, rng_seed).
Dataset sample_mixture(const std::vector<MixtureComponent>& components, std::size_t n,
                       std::uint64_t rng_seed);

// Benchmark data: n_clusters equally weighted unit-variance Gaussians with
// centres drawn uniformly from [-5, 5]^n_dims.
Dataset make_bench_dataset(std::size_t n, std::size_t n_dims, std::size_t n_clusters,
                           std::uint64_t rng_seed);

}  // namespace gmmdiag
