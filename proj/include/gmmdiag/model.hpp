// gmmdiag/model.hpp
//
// Diagonal-covariance Gaussian mixture parameters: hefts (mixture weights),
// means and diagonal covariances for N_G Gaussians of dimension D, plus the
// per-Gaussian constants needed for log-density evaluation.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gmmdiag {

// One row per Gaussian.
using Rows = std::vector<std::vector<double>>;

// Input tolerance on the heft sum. Accepted hefts are renormalised.
inline constexpr double kHeftSumTolerance = 1e-9;
// Tolerance on the heft sum of a stored model (and of a loaded file).
inline constexpr double kHeftSumInvariant = 1e-12;

class GmmModel {
 public:
  // Empty model: zero Gaussians, zero dimensions.
  GmmModel() = default;

  // All means zero, all diagonal covariances one, uniform hefts.
  static GmmModel reset(std::size_t n_dims, std::size_t n_gaus);

  // Validated construction; hefts within kHeftSumTolerance of 1 are
  // renormalised. Throws ValidationError naming the offending field.
  static GmmModel from_params(const Rows& means, const Rows& dcovs, std::span<const double> hefts);

  // Flat row-major variant of from_params (means/dcovs are N_G*D values).
  static GmmModel from_flat(std::size_t n_dims, std::vector<double> means,
                            std::vector<double> dcovs, std::vector<double> hefts);

  // May change N_G and D.
  void set_params(const Rows& means, const Rows& dcovs, std::span<const double> hefts);
  // The individual setters must match the existing N_G and D.
  void set_means(const Rows& means);
  void set_dcovs(const Rows& dcovs);
  void set_hefts(std::span<const double> hefts);

  std::size_t n_dims() const noexcept { return n_dims_; }
  std::size_t n_gaus() const noexcept { return hefts_.size(); }

  std::span<const double> hefts() const noexcept { return hefts_; }
  std::span<const double> means() const noexcept { return means_; }
  std::span<const double> dcovs() const noexcept { return dcovs_; }
  std::span<const double> mean(std::size_t g) const noexcept {
    return {means_.data() + g * n_dims_, n_dims_};
  }
  std::span<const double> dcov(std::size_t g) const noexcept {
    return {dcovs_.data() + g * n_dims_, n_dims_};
  }
  Rows means_rows() const;
  Rows dcovs_rows() const;

  // Cached constants, always consistent with the current parameters.
  // log_det_term(g) = -(D/2) log(2 pi) - 1/2 sum_d log dcov(g,d).
  double log_det_term(std::size_t g) const noexcept { return log_det_terms_[g]; }
  std::span<const double> inv_dcov(std::size_t g) const noexcept {
    return {inv_dcovs_.data() + g * n_dims_, n_dims_};
  }
  // log of heft g; -inf for zero hefts.
  double log_heft(std::size_t g) const noexcept { return log_hefts_[g]; }

  // Bit-exact comparison of hefts, means and dcovs.
  friend bool operator==(const GmmModel& a, const GmmModel& b) noexcept;

 private:
  friend GmmModel parse_model(std::string_view text);
  friend class ModelUpdate;

  enum class HeftPolicy { kRenormalise, kStrict };

  void assign(std::size_t n_dims, std::vector<double> means, std::vector<double> dcovs,
              std::vector<double> hefts, HeftPolicy policy);
  void refresh_constants();

  std::size_t n_dims_ = 0;
  std::vector<double> hefts_;
  std::vector<double> means_;
  std::vector<double> dcovs_;

  std::vector<double> log_hefts_;
  std::vector<double> log_det_terms_;
  std::vector<double> inv_dcovs_;
};

// Internal constructor for the trainers: installs parameters that already
// satisfy the invariants (hefts normalised, dcovs positive) without the
// input-tolerance renormalisation. Still validates.
class ModelUpdate {
 public:
  static GmmModel make(std::size_t n_dims, std::vector<double> means, std::vector<double> dcovs,
                       std::vector<double> hefts);
};

// Text model format:
//   GMM_DIAG 1
//   <D> <N_G>
//   <N_G hefts>
//   <N_G lines of D means>
//   <N_G lines of D dcovs>
// Reals are written with 17 significant digits, so save/load is bit-exact.
inline constexpr std::string_view kModelMagic = "GMM_DIAG";
inline constexpr int kModelVersion = 1;

std::string format_model(const GmmModel& model);
void write_model(std::ostream& out, const GmmModel& model);
// Throws LoadError.
GmmModel parse_model(std::string_view text);

// Throws LoadError{kIo} on I/O failure.
void save(const GmmModel& model, const std::filesystem::path& path);
// Throws LoadError.
GmmModel load(const std::filesystem::path& path);

}  // namespace gmmdiag
