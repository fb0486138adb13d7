// gmmdiag/synthetic.cpp

#include "gmmdiag/synthetic.hpp"

#include <random>
#include <stdexcept>

#include "gmmdiag/errors.hpp"
#include "gmmdiag/inference.hpp"

namespace gmmdiag {

namespace {

std::vector<double> fig1_centre(std::size_t which) {
  std::vector<double> c(kFig1Dims);
  for (std::size_t d = 0; d < kFig1Dims; ++d) c[d] = static_cast<double>(d + 1) + (which == 1 ? 2.0 : 0.0);
  return c;
}

}  // namespace

Dataset make_fig1_dataset(std::size_t n, std::uint64_t rng_seed) {
  if (n == 0) throw std::invalid_argument("fig1: sample count must be positive");
  const auto a = fig1_centre(0);
  const auto b = fig1_centre(1);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values;
  values.reserve(n * kFig1Dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& centre = (i % 3 == 2) ? b : a;
    for (std::size_t d = 0; d < kFig1Dims; ++d) values.push_back(centre[d] + normal(rng));
  }
  return Dataset(kFig1Dims, std::move(values));
}

GmmModel fig1_true_model() {
  const std::vector<double> hefts = {2.0 / 3.0, 1.0 / 3.0};
  return GmmModel::from_params({fig1_centre(0), fig1_centre(1)},
                               {std::vector<double>(kFig1Dims, 1.0),
                                std::vector<double>(kFig1Dims, 1.0)},
                               hefts);
}

GmmModel model_from_components(const std::vector<MixtureComponent>& components) {
  if (components.empty()) throw ValidationError("hefts", "no components");
  Rows means, dcovs;
  std::vector<double> hefts;
  for (const auto& c : components) {
    if (c.stddev.size() != c.mean.size()) {
      throw ValidationError("dcovs", "stddev and mean lengths differ");
    }
    std::vector<double> var(c.stddev.size());
    for (std::size_t d = 0; d < var.size(); ++d) {
      if (!(c.stddev[d] > 0.0)) throw ValidationError("dcovs", "stddev must be positive");
      var[d] = c.stddev[d] * c.stddev[d];
    }
    means.push_back(c.mean);
    dcovs.push_back(std::move(var));
    hefts.push_back(c.weight);
  }
  return GmmModel::from_params(means, dcovs, hefts);
}

Dataset sample_mixture(const std::vector<MixtureComponent>& components, std::size_t n,
                       std::uint64_t rng_seed) {
  return generate(model_from_components(components), n, rng_seed);
}

Dataset make_bench_dataset(std::size_t n, std::size_t n_dims, std::size_t n_clusters,
                           std::uint64_t rng_seed) {
  if (n_dims == 0 || n_clusters == 0) {
    throw std::invalid_argument("bench dataset: dimensions and clusters must be positive");
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> centre(-5.0, 5.0);
  std::vector<double> means(n_clusters * n_dims);
  for (double& m : means) m = centre(rng);
  auto model = GmmModel::from_flat(n_dims, std::move(means),
                                   std::vector<double>(n_clusters * n_dims, 1.0),
                                   std::vector<double>(n_clusters, 1.0 / static_cast<double>(n_clusters)));
  return generate(model, n, rng_seed + 1);
}

}  // namespace gmmdiag
