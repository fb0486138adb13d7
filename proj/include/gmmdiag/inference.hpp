// gmmdiag/inference.hpp
//
// Hard assignment, histograms and sampling for a trained model.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gmmdiag/dataset.hpp"
#include "gmmdiag/model.hpp"

namespace gmmdiag {

enum class AssignMode {
  kEuclDist,  // nearest mean, squared Euclidean distance
  kProbDist,  // most likely Gaussian: argmax log heft + log N
};

// Ties go to the lowest index.
std::size_t assign(std::span<const double> x, const GmmModel& model, AssignMode mode);
std::vector<std::size_t> assign(const Dataset& data, const GmmModel& model, AssignMode mode,
                                std::size_t n_threads = 1);

std::vector<std::size_t> raw_hist(const Dataset& data, const GmmModel& model, AssignMode mode,
                                  std::size_t n_threads = 1);
// raw_hist / N_V. Throws std::invalid_argument on an empty dataset.
std::vector<double> norm_hist(const Dataset& data, const GmmModel& model, AssignMode mode,
                              std::size_t n_threads = 1);

// n samples: pick a Gaussian from the hefts, then mean + sqrt(dcov) * z with
// z standard normal. Deterministic for a fixed seed. When `components` is
// non-null it receives the drawn Gaussian index of each sample.
Dataset generate(const GmmModel& model, std::size_t n, std::uint64_t rng_seed,
                 std::vector<std::size_t>* components = nullptr);

}  // namespace gmmdiag
