// gmmdiag/inference.cpp

#include "gmmdiag/inference.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "gmmdiag/likelihood.hpp"
#include "gmmdiag/parallel.hpp"

namespace gmmdiag {

namespace {

std::size_t assign_unchecked(const double* x, const GmmModel& model, AssignMode mode) noexcept {
  const std::size_t n_dims = model.n_dims();
  std::size_t best = 0;
  if (mode == AssignMode::kEuclDist) {
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < model.n_gaus(); ++g) {
      const double* m = model.mean(g).data();
      double acc = 0.0;
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double diff = x[d] - m[d];
        acc += diff * diff;
      }
      if (acc < best_dist) {
        best_dist = acc;
        best = g;
      }
    }
  } else {
    double best_score = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t g = 0; g < model.n_gaus(); ++g) {
      if (model.hefts()[g] == 0.0) continue;
      const double score = model.log_heft(g) + detail::log_gauss_unchecked(x, g, model);
      if (!found || score > best_score) {
        best_score = score;
        best = g;
        found = true;
      }
    }
  }
  return best;
}

}  // namespace

std::size_t assign(std::span<const double> x, const GmmModel& model, AssignMode mode) {
  detail::check_dims(x, model);
  return assign_unchecked(x.data(), model, mode);
}

std::vector<std::size_t> assign(const Dataset& data, const GmmModel& model, AssignMode mode,
                                std::size_t n_threads) {
  if (model.n_gaus() == 0) throw std::invalid_argument("assign: model is empty");
  std::vector<std::size_t> out(data.n_samples());
  if (out.empty()) return out;
  if (data.n_dims() != model.n_dims()) {
    throw std::invalid_argument("assign: dataset has " + std::to_string(data.n_dims()) +
                                " dimensions, model has " + std::to_string(model.n_dims()));
  }
  const BlockGrid grid(data.n_samples());
  for_each_block(grid, n_threads, [&](std::size_t b) {
    for (std::size_t i = grid.block(b).begin; i < grid.block(b).end; ++i) {
      out[i] = assign_unchecked(data.sample(i).data(), model, mode);
    }
  });
  return out;
}

std::vector<std::size_t> raw_hist(const Dataset& data, const GmmModel& model, AssignMode mode,
                                  std::size_t n_threads) {
  std::vector<std::size_t> hist(model.n_gaus(), 0);
  for (std::size_t g : assign(data, model, mode, n_threads)) ++hist[g];
  return hist;
}

std::vector<double> norm_hist(const Dataset& data, const GmmModel& model, AssignMode mode,
                              std::size_t n_threads) {
  if (data.empty()) throw std::invalid_argument("norm_hist: empty dataset");
  const auto raw = raw_hist(data, model, mode, n_threads);
  std::vector<double> out(raw.size());
  const double n = static_cast<double>(data.n_samples());
  for (std::size_t g = 0; g < raw.size(); ++g) out[g] = static_cast<double>(raw[g]) / n;
  return out;
}

Dataset generate(const GmmModel& model, std::size_t n, std::uint64_t rng_seed,
                 std::vector<std::size_t>* components) {
  if (n == 0) throw std::invalid_argument("generate: sample count must be positive");
  if (model.n_gaus() == 0) throw std::invalid_argument("generate: model is empty");
  const std::size_t n_dims = model.n_dims();
  const auto hefts = model.hefts();

  std::vector<double> cumulative(hefts.size());
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t g = 0; g < hefts.size(); ++g) {
    running += hefts[g];
    cumulative[g] = running;
    if (hefts[g] > 0.0) last_positive = g;
  }

  std::vector<double> sd(model.dcovs().size());
  for (std::size_t k = 0; k < sd.size(); ++k) sd[k] = std::sqrt(model.dcovs()[k]);

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> values(n * n_dims);
  if (components != nullptr) components->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(rng) * running;
    std::size_t g = last_positive;
    for (std::size_t k = 0; k < cumulative.size(); ++k) {
      if (hefts[k] > 0.0 && u < cumulative[k]) {
        g = k;
        break;
      }
    }
    if (components != nullptr) (*components)[i] = g;
    const double* mean = model.mean(g).data();
    const double* s = sd.data() + g * n_dims;
    for (std::size_t d = 0; d < n_dims; ++d) values[i * n_dims + d] = mean[d] + s[d] * normal(rng);
  }
  return Dataset(n_dims, std::move(values));
}

}  // namespace gmmdiag
