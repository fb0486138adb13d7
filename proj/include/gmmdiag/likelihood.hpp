// gmmdiag/likelihood.hpp
//
// Log-domain Gaussian and mixture densities.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmmdiag/dataset.hpp"
#include "gmmdiag/model.hpp"

namespace gmmdiag {

// log(exp(log_a) + exp(log_b)) as max + log1p(exp(min - max)). Returns the
// other argument when one is -inf; NaN inputs propagate.
double log_add(double log_a, double log_b) noexcept;

// log N(x | mean_g, diag(dcov_g)). Throws std::invalid_argument on a
// dimension mismatch or an out-of-range g.
double log_gauss(std::span<const double> x, std::size_t g, const GmmModel& model);

// log sum_g heft_g N(x | g), folded with log_add in ascending g order.
// Zero-heft components are skipped. Returns -inf only if every remaining
// term underflows to -inf.
double log_p(std::span<const double> x, const GmmModel& model);

// Same as log_gauss; the per-Gaussian log-likelihood without the heft.
double log_p_comp(std::span<const double> x, std::size_t g, const GmmModel& model);

std::vector<double> log_p_batch(const Dataset& data, const GmmModel& model,
                                std::size_t n_threads = 1);
std::vector<double> log_p_comp_batch(const Dataset& data, std::size_t g, const GmmModel& model,
                                     std::size_t n_threads = 1);

// Arithmetic mean of the batch values, summed block-wise (see BlockGrid) so
// the result is independent of n_threads. Throws on an empty dataset.
double avg_log_p(const Dataset& data, const GmmModel& model, std::size_t n_threads = 1);
double avg_log_p(const Dataset& data, std::size_t g, const GmmModel& model,
                 std::size_t n_threads = 1);

namespace detail {

// Unchecked kernels shared with the trainers; x points at n_dims values.
double log_gauss_unchecked(const double* x, std::size_t g, const GmmModel& model) noexcept;

// Writes heft-weighted log terms for every Gaussian into terms (size N_G;
// -inf for zero hefts) and returns their log-sum.
double weighted_log_terms(const double* x, const GmmModel& model, double* terms) noexcept;

void check_dims(std::span<const double> x, const GmmModel& model);

}  // namespace detail

}  // namespace gmmdiag
