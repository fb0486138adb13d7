// gmmdiag/errors.hpp
//
// Exception types used across the library. Argument errors use
// std::invalid_argument directly; the classes below carry extra context.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmmdiag {

// A model parameter failed validation. field() is one of "hefts", "means",
// "dcovs" or "shape".
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class LoadErrorKind { kIo, kBadMagic, kVersion, kSyntax, kShape, kInvariant };

const char* to_string(LoadErrorKind kind) noexcept;

class LoadError : public std::runtime_error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  LoadErrorKind kind() const noexcept { return kind_; }

 private:
  LoadErrorKind kind_;
};

// Malformed or unreadable dataset input.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training could not produce a usable model.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientSamplesError : public FitError {
 public:
  InsufficientSamplesError(std::size_t n_samples, std::size_t n_gaus)
      : FitError("insufficient samples: " + std::to_string(n_samples) +
                 " samples for " + std::to_string(n_gaus) + " Gaussians"),
        n_samples_(n_samples), n_gaus_(n_gaus) {}

  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_gaus() const noexcept { return n_gaus_; }

 private:
  std::size_t n_samples_;
  std::size_t n_gaus_;
};

// Every mixture component underflowed for one sample, so its
// responsibilities are undefined. iteration() is 0 when raised outside EM.
class DegeneratePointError : public FitError {
 public:
  DegeneratePointError(std::size_t sample_index, std::size_t iteration = 0)
      : FitError(make_message(sample_index, iteration)),
        sample_index_(sample_index), iteration_(iteration) {}

  std::size_t sample_index() const noexcept { return sample_index_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  static std::string make_message(std::size_t sample_index, std::size_t iteration) {
    std::string msg = "degenerate point: all components underflow at sample " +
                      std::to_string(sample_index);
    if (iteration > 0) msg += " (EM iteration " + std::to_string(iteration) + ")";
    msg += "; check var_floor and data scaling";
    return msg;
  }

  std::size_t sample_index_;
  std::size_t iteration_;
};

}  // namespace gmmdiag
