// gmmdiag/likelihood.cpp

#include "gmmdiag/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmmdiag/parallel.hpp"

namespace gmmdiag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_gaussian(std::size_t g, const GmmModel& model) {
  if (g >= model.n_gaus()) {
    throw std::invalid_argument("Gaussian index " + std::to_string(g) + " out of range (N_G=" +
                                std::to_string(model.n_gaus()) + ")");
  }
}

void check_data(const Dataset& data, const GmmModel& model) {
  if (model.n_gaus() == 0) throw std::invalid_argument("model is empty");
  if (!data.empty() && data.n_dims() != model.n_dims()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.n_dims()) +
                                " dimensions, model has " + std::to_string(model.n_dims()));
  }
}

template <typename Fn>
std::vector<double> batch(const Dataset& data, std::size_t n_threads, Fn per_sample) {
  std::vector<double> out(data.n_samples());
  if (out.empty()) return out;
  const BlockGrid grid(data.n_samples());
  for_each_block(grid, n_threads, [&](std::size_t b) {
    const Range r = grid.block(b);
    for (std::size_t i = r.begin; i < r.end; ++i) out[i] = per_sample(data.sample(i).data());
  });
  return out;
}

// Block partial sums reduced in ascending block order.
template <typename Fn>
double blocked_mean(const Dataset& data, std::size_t n_threads, Fn per_sample) {
  if (data.empty()) throw std::invalid_argument("average over an empty dataset");
  const BlockGrid grid(data.n_samples());
  std::vector<double> partial(grid.n_blocks(), 0.0);
  for_each_block(grid, n_threads, [&](std::size_t b) {
    const Range r = grid.block(b);
    double acc = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) acc += per_sample(data.sample(i).data());
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(data.n_samples());
}

}  // namespace

double log_add(double log_a, double log_b) noexcept {
  if (std::isnan(log_a) || std::isnan(log_b)) return std::numeric_limits<double>::quiet_NaN();
  const double hi = log_a >= log_b ? log_a : log_b;
  const double lo = log_a >= log_b ? log_b : log_a;
  if (lo == kNegInf) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

namespace detail {

void check_dims(std::span<const double> x, const GmmModel& model) {
  if (model.n_gaus() == 0) throw std::invalid_argument("model is empty");
  if (x.size() != model.n_dims()) {
    throw std::invalid_argument("vector has " + std::to_string(x.size()) +
                                " dimensions, model has " + std::to_string(model.n_dims()));
  }
}

double log_gauss_unchecked(const double* x, std::size_t g, const GmmModel& model) noexcept {
  const std::size_t n_dims = model.n_dims();
  const double* mean = model.mean(g).data();
  const double* inv = model.inv_dcov(g).data();
  double quad = 0.0;
  for (std::size_t d = 0; d < n_dims; ++d) {
    const double diff = x[d] - mean[d];
    quad += diff * diff * inv[d];
  }
  return model.log_det_term(g) - 0.5 * quad;
}

double weighted_log_terms(const double* x, const GmmModel& model, double* terms) noexcept {
  double total = kNegInf;
  bool first = true;
  for (std::size_t g = 0; g < model.n_gaus(); ++g) {
    if (model.hefts()[g] == 0.0) {
      terms[g] = kNegInf;
      continue;
    }
    terms[g] = model.log_heft(g) + log_gauss_unchecked(x, g, model);
    total = first ? terms[g] : log_add(total, terms[g]);
    first = false;
  }
  return total;
}

}  // namespace detail

double log_gauss(std::span<const double> x, std::size_t g, const GmmModel& model) {
  detail::check_dims(x, model);
  check_gaussian(g, model);
  return detail::log_gauss_unchecked(x.data(), g, model);
}

namespace {

double log_p_unchecked(const double* x, const GmmModel& model) noexcept {
  double total = kNegInf;
  bool first = true;
  for (std::size_t g = 0; g < model.n_gaus(); ++g) {
    if (model.hefts()[g] == 0.0) continue;
    const double term = model.log_heft(g) + detail::log_gauss_unchecked(x, g, model);
    total = first ? term : log_add(total, term);
    first = false;
  }
  return total;
}

}  // namespace

double log_p(std::span<const double> x, const GmmModel& model) {
  detail::check_dims(x, model);
  return log_p_unchecked(x.data(), model);
}

double log_p_comp(std::span<const double> x, std::size_t g, const GmmModel& model) {
  return log_gauss(x, g, model);
}

std::vector<double> log_p_batch(const Dataset& data, const GmmModel& model,
                                std::size_t n_threads) {
  check_data(data, model);
  return batch(data, n_threads, [&](const double* x) { return log_p_unchecked(x, model); });
}

std::vector<double> log_p_comp_batch(const Dataset& data, std::size_t g, const GmmModel& model,
                                     std::size_t n_threads) {
  check_data(data, model);
  check_gaussian(g, model);
  return batch(data, n_threads,
               [&](const double* x) { return detail::log_gauss_unchecked(x, g, model); });
}

double avg_log_p(const Dataset& data, const GmmModel& model, std::size_t n_threads) {
  check_data(data, model);
  return blocked_mean(data, n_threads, [&](const double* x) { return log_p_unchecked(x, model); });
}

double avg_log_p(const Dataset& data, std::size_t g, const GmmModel& model,
                 std::size_t n_threads) {
  check_data(data, model);
  check_gaussian(g, model);
  return blocked_mean(data, n_threads,
                      [&](const double* x) { return detail::log_gauss_unchecked(x, g, model); });
}

}  // namespace gmmdiag
