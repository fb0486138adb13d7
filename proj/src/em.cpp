// gmmdiag/em.cpp

#include "gmmdiag/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

#include "gmmdiag/errors.hpp"
#include "gmmdiag/kmeans.hpp"
#include "gmmdiag/likelihood.hpp"

namespace gmmdiag {

void FitConfig::validate() const {
  if (n_gaus == 0) throw std::invalid_argument("n_gaus must be positive");
  if (n_threads == 0) throw std::invalid_argument("n_threads must be positive");
  if (!std::isfinite(var_floor) || var_floor < std::numeric_limits<double>::min()) {
    throw std::invalid_argument("var_floor must be a positive normal number");
  }
  if (!std::isfinite(em_rel_tol) || em_rel_tol < 0.0) {
    throw std::invalid_argument("em_rel_tol must be finite and non-negative");
  }
}

void Accumulators::add(const Accumulators& other) {
  if (other.n_gaus != n_gaus || other.n_dims != n_dims) {
    throw std::invalid_argument("Accumulators::add: shape mismatch");
  }
  for (std::size_t g = 0; g < n_gaus; ++g) occupancy[g] += other.occupancy[g];
  for (std::size_t k = 0; k < sum_x.size(); ++k) sum_x[k] += other.sum_x[k];
  for (std::size_t k = 0; k < sum_xx.size(); ++k) sum_xx[k] += other.sum_xx[k];
  log_p_sum += other.log_p_sum;
  n_samples += other.n_samples;
}

std::vector<double> FitReport::em_trace() const {
  std::vector<double> out;
  for (const auto& e : trace) {
    if (e.phase == Phase::kEm) out.push_back(e.value);
  }
  return out;
}

std::vector<double> responsibilities(std::span<const double> x, const GmmModel& model) {
  detail::check_dims(x, model);
  std::vector<double> out(model.n_gaus());
  const double total = detail::weighted_log_terms(x.data(), model, out.data());
  if (!std::isfinite(total)) throw DegeneratePointError(0);
  for (std::size_t g = 0; g < out.size(); ++g) {
    out[g] = model.hefts()[g] == 0.0 ? 0.0 : std::exp(out[g] - total);
  }
  return out;
}

Accumulators accumulate_chunk(const Dataset& data, Range range, const GmmModel& model) {
  if (range.begin > range.end || range.end > data.n_samples()) {
    throw std::invalid_argument("accumulate_chunk: range outside the dataset");
  }
  if (model.n_gaus() == 0) throw std::invalid_argument("accumulate_chunk: model is empty");
  if (range.size() > 0 && data.n_dims() != model.n_dims()) {
    throw std::invalid_argument("accumulate_chunk: dataset and model dimensionality differ");
  }
  const std::size_t n_gaus = model.n_gaus();
  const std::size_t n_dims = model.n_dims();
  const auto hefts = model.hefts();

  Accumulators acc(n_gaus, n_dims);
  std::vector<double> terms(n_gaus);
  for (std::size_t i = range.begin; i < range.end; ++i) {
    const double* x = data.sample(i).data();
    const double total = detail::weighted_log_terms(x, model, terms.data());
    if (!std::isfinite(total)) throw DegeneratePointError(i);
    acc.log_p_sum += total;
    for (std::size_t g = 0; g < n_gaus; ++g) {
      if (hefts[g] == 0.0) continue;
      const double l = std::exp(terms[g] - total);
      acc.occupancy[g] += l;
      double* sx = acc.sum_x.data() + g * n_dims;
      double* sxx = acc.sum_xx.data() + g * n_dims;
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double lx = l * x[d];
        sx[d] += lx;
        sxx[d] += lx * x[d];
      }
    }
  }
  acc.n_samples = range.size();
  return acc;
}

GmmModel reduce_and_update(std::span<const Accumulators> accs, const GmmModel& previous,
                           double var_floor, std::size_t n_samples) {
  if (accs.empty()) throw std::invalid_argument("reduce_and_update: no accumulators");
  if (n_samples == 0) throw std::invalid_argument("reduce_and_update: no samples");
  const std::size_t n_gaus = previous.n_gaus();
  const std::size_t n_dims = previous.n_dims();
  if (accs.front().n_gaus != n_gaus || accs.front().n_dims != n_dims) {
    throw std::invalid_argument("reduce_and_update: accumulators do not match the model");
  }

  Accumulators total(n_gaus, n_dims);
  for (const auto& a : accs) total.add(a);

  const double n = static_cast<double>(n_samples);
  std::vector<double> means(previous.means().begin(), previous.means().end());
  std::vector<double> dcovs(previous.dcovs().begin(), previous.dcovs().end());
  std::vector<double> hefts(n_gaus, 0.0);
  bool any_alive = false;
  double heft_sum = 0.0;

  for (std::size_t g = 0; g < n_gaus; ++g) {
    const double occ = total.occupancy[g];
    hefts[g] = occ / n;
    heft_sum += hefts[g];
    double* mean = means.data() + g * n_dims;
    double* dcov = dcovs.data() + g * n_dims;
    if (occ > kDegenerateOccupancy * n) {
      any_alive = true;
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double m = total.sum_x[g * n_dims + d] / occ;
        const double v = total.sum_xx[g * n_dims + d] / occ - m * m;
        mean[d] = m;
        dcov[d] = std::max(v, var_floor);
      }
    } else {
      // Degenerate: keep the previous mean and covariance.
      for (std::size_t d = 0; d < n_dims; ++d) dcov[d] = std::max(dcov[d], var_floor);
    }
  }
  if (!any_alive || !(heft_sum > 0.0)) {
    throw FitError("all Gaussians are degenerate (no occupancy)");
  }
  for (double& w : hefts) w /= heft_sum;

  return ModelUpdate::make(n_dims, std::move(means), std::move(dcovs), std::move(hefts));
}

namespace {

// E-step over the block grid; returns per-block accumulators in block order.
std::vector<Accumulators> accumulate_blocks(const Dataset& data, const GmmModel& model,
                                            std::size_t n_threads) {
  const BlockGrid grid(data.n_samples());
  std::vector<Accumulators> accs(grid.n_blocks());
  for_each_block(grid, n_threads,
                 [&](std::size_t b) { accs[b] = accumulate_chunk(data, grid.block(b), model); });
  return accs;
}

double average_log_p(const std::vector<Accumulators>& accs, std::size_t n_samples) {
  double total = 0.0;
  for (const auto& a : accs) total += a.log_p_sum;
  return total / static_cast<double>(n_samples);
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::ostream& progress_stream(const FitConfig& config) {
  return config.progress != nullptr ? *config.progress : std::cerr;
}

void check_fit_inputs(const Dataset& data, const GmmModel& model) {
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  if (model.n_gaus() == 0) throw std::invalid_argument("initial model is empty");
  if (model.n_dims() != data.n_dims()) {
    throw std::invalid_argument("model has " + std::to_string(model.n_dims()) +
                                " dimensions, dataset has " + std::to_string(data.n_dims()));
  }
}

}  // namespace

GmmModel em_step(const Dataset& data, const GmmModel& model, double var_floor,
                 std::size_t n_threads, Accumulators* reduced) {
  check_fit_inputs(data, model);
  auto accs = accumulate_blocks(data, model, n_threads);
  if (reduced != nullptr) {
    *reduced = Accumulators(model.n_gaus(), model.n_dims());
    for (const auto& a : accs) reduced->add(a);
  }
  return reduce_and_update(accs, model, var_floor, data.n_samples());
}

FitResult em_fit(const Dataset& data, const GmmModel& init, const FitConfig& config) {
  config.validate();
  check_fit_inputs(data, init);

  FitResult result{init, {}};
  FitReport& report = result.report;
  const std::size_t n = data.n_samples();
  const auto start = Clock::now();

  if (config.em_iter == 0) {
    report.initial_avg_log_p = avg_log_p(data, init, config.n_threads);
    report.final_avg_log_p = report.initial_avg_log_p;
    return result;
  }

  auto record = [&](std::size_t iteration, double value) {
    const double elapsed = ms_since(start);
    report.trace.push_back({Phase::kEm, iteration, value, elapsed});
    if (config.print_mode) {
      progress_stream(config) << "em iter " << iteration << " avg_log_p " << value
                              << " elapsed_ms " << elapsed << '\n';
    }
  };

  double previous = 0.0;
  for (std::size_t it = 1; it <= config.em_iter; ++it) {
    std::vector<Accumulators> accs;
    try {
      accs = accumulate_blocks(data, result.model, config.n_threads);
    } catch (const DegeneratePointError& e) {
      throw DegeneratePointError(e.sample_index(), it);
    }
    const double current = average_log_p(accs, n);
    if (it == 1) {
      report.initial_avg_log_p = current;
    } else {
      record(it - 1, current);
      if (current - previous < config.em_rel_tol * std::abs(previous)) {
        report.converged = true;
        break;
      }
    }
    previous = current;
    result.model = reduce_and_update(accs, result.model, config.var_floor, n);
    report.em_iterations = it;
  }

  if (!report.converged) {
    try {
      record(report.em_iterations, avg_log_p(data, result.model, config.n_threads));
    } catch (const DegeneratePointError& e) {
      throw DegeneratePointError(e.sample_index(), report.em_iterations);
    }
  }
  report.final_avg_log_p = report.trace.back().value;
  report.em_seconds = ms_since(start) / 1000.0;
  return result;
}

GmmModel init_from_kmeans(const Dataset& data, const KmState& state,
                          std::span<const double> global_var, double var_floor,
                          std::size_t n_threads) {
  const std::size_t n = data.n_samples();
  const std::size_t n_dims = data.n_dims();
  const std::size_t n_gaus = state.n_gaus();
  if (n == 0 || state.assignment.size() != n || state.n_dims != n_dims ||
      global_var.size() != n_dims || n_gaus == 0) {
    throw std::invalid_argument("init_from_kmeans: inputs do not match");
  }

  const BlockGrid grid(n);
  std::vector<double> partial(grid.n_blocks() * n_gaus * n_dims, 0.0);
  for_each_block(grid, n_threads, [&](std::size_t b) {
    double* acc = partial.data() + b * n_gaus * n_dims;
    for (std::size_t i = grid.block(b).begin; i < grid.block(b).end; ++i) {
      const std::size_t g = state.assignment[i];
      if (g >= n_gaus) continue;
      const double* x = data.sample(i).data();
      const double* m = state.means.data() + g * n_dims;
      for (std::size_t d = 0; d < n_dims; ++d) {
        const double diff = x[d] - m[d];
        acc[g * n_dims + d] += diff * diff;
      }
    }
  });
  std::vector<double> sq(n_gaus * n_dims, 0.0);
  for (std::size_t b = 0; b < grid.n_blocks(); ++b) {
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] += partial[b * n_gaus * n_dims + k];
  }

  std::vector<double> dcovs(n_gaus * n_dims);
  std::vector<double> hefts(n_gaus);
  const double heft_floor = 1.0 / (100.0 * static_cast<double>(n_gaus));
  double heft_sum = 0.0;
  for (std::size_t g = 0; g < n_gaus; ++g) {
    const std::size_t count = state.counts[g];
    for (std::size_t d = 0; d < n_dims; ++d) {
      const double v = count >= 2 ? sq[g * n_dims + d] / static_cast<double>(count) : global_var[d];
      dcovs[g * n_dims + d] = std::max(v, var_floor);
    }
    hefts[g] = std::max(static_cast<double>(count) / static_cast<double>(n), heft_floor);
    heft_sum += hefts[g];
  }
  for (double& w : hefts) w /= heft_sum;
  return ModelUpdate::make(n_dims, state.means, std::move(dcovs), std::move(hefts));
}

FitResult learn(const Dataset& data, const FitConfig& config, const GmmModel& existing) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  const std::size_t n = data.n_samples();
  if (n < config.n_gaus) throw InsufficientSamplesError(n, config.n_gaus);

  std::vector<std::string> warnings;
  if (n < 10 * config.n_gaus) {
    warnings.push_back("only " + std::to_string(n) + " samples for " +
                       std::to_string(config.n_gaus) +
                       " Gaussians; at least 10 per Gaussian are recommended");
  }

  if (config.seed_mode == SeedMode::kKeepExisting) {
    if (existing.n_gaus() == 0) {
      throw std::invalid_argument("keep-existing requires an initial model");
    }
    if (existing.n_gaus() != config.n_gaus || existing.n_dims() != data.n_dims()) {
      throw std::invalid_argument("existing model (D=" + std::to_string(existing.n_dims()) +
                                  ", N_G=" + std::to_string(existing.n_gaus()) +
                                  ") does not match the data and n_gaus");
    }
    FitResult result = em_fit(data, existing, config);
    result.report.warnings = std::move(warnings);
    return result;
  }

  const std::vector<double> global_var =
      n >= 2 ? global_diag_cov(data, config.n_threads) : std::vector<double>(data.n_dims(), 1.0);
  DistMode mode = DistMode::eucl_sq();
  if (config.dist_mode == DistKind::kMahaDiag) {
    std::vector<double> inv(global_var.size());
    for (std::size_t d = 0; d < inv.size(); ++d) inv[d] = 1.0 / global_var[d];
    mode = DistMode::maha_diag(std::move(inv));
  }

  const auto km_start = Clock::now();
  auto seeds = seed_means(data, config.n_gaus, config.seed_mode, mode, config.rng_seed);

  std::vector<TraceEntry> km_trace;
  KmeansOptions options;
  options.max_iter = config.km_iter;
  options.n_threads = config.n_threads;
  options.on_iteration = [&](std::size_t it, double objective) {
    const double elapsed = ms_since(km_start);
    km_trace.push_back({Phase::kKmeans, it, objective, elapsed});
    if (config.print_mode) {
      progress_stream(config) << "kmeans iter " << it << " objective " << objective
                              << " elapsed_ms " << elapsed << '\n';
    }
  };
  KmeansResult km = run_kmeans(data, std::move(seeds), mode, options);

  GmmModel init;
  if (config.km_iter == 0) {
    std::vector<double> dcovs;
    dcovs.reserve(config.n_gaus * data.n_dims());
    for (std::size_t g = 0; g < config.n_gaus; ++g) {
      for (double v : global_var) dcovs.push_back(std::max(v, config.var_floor));
    }
    init = ModelUpdate::make(data.n_dims(), km.state.means, std::move(dcovs),
                             std::vector<double>(config.n_gaus,
                                                 1.0 / static_cast<double>(config.n_gaus)));
  } else {
    init = init_from_kmeans(data, km.state, global_var, config.var_floor, config.n_threads);
  }
  const double km_seconds = ms_since(km_start) / 1000.0;

  FitResult result = em_fit(data, init, config);
  FitReport& report = result.report;
  report.trace.insert(report.trace.begin(), km_trace.begin(), km_trace.end());
  report.km_seconds = km_seconds;
  report.km_iterations = km.iterations;
  report.resurrections = km.resurrections;
  report.warnings = std::move(warnings);
  return result;
}

}  // namespace gmmdiag
