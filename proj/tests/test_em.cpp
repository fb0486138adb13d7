#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gmmdiag/gmmdiag.hpp"
#include "oracles.hpp"

using namespace gmmdiag;

namespace {

bool close_vec(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!oracle::rel_close(a[i], b[i], tol)) return false;
  }
  return true;
}

FitConfig quiet_config(std::size_t n_gaus, std::uint64_t seed) {
  FitConfig config;
  config.n_gaus = n_gaus;
  config.rng_seed = seed;
  return config;
}

}  // namespace

TEST_CASE("responsibilities") {
  const std::vector<double> hefts = {0.5, 0.5};
  const auto m = GmmModel::from_params({{-1.0}, {1.0}}, {{1.0}, {1.0}}, hefts);
  const std::vector<double> mid = {0.0};
  const auto r = responsibilities(mid, m);
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-15));

  const std::vector<double> x = {0.7};
  const auto expected = oracle::posteriors(x.data(), m);
  const auto got = responsibilities(x, m);
  CHECK(close_vec(got, expected, 1e-14));

  const std::vector<double> zero_heft = {1.0, 0.0};
  const auto mz = GmmModel::from_params({{-1.0}, {1.0}}, {{1.0}, {1.0}}, zero_heft);
  CHECK(responsibilities(x, mz) == std::vector<double>{1.0, 0.0});

  // Far from both means the linear oracle fails but the log domain does not.
  const std::vector<double> far = {1e5};
  const auto rf = responsibilities(far, m);
  CHECK(rf[1] == 1.0);
  CHECK(rf[0] == 0.0);

  const std::vector<double> overflow = {1e200};
  CHECK_THROWS_AS(responsibilities(overflow, m), DegeneratePointError);
  const std::vector<double> wrong = {1.0, 2.0};
  CHECK_THROWS_AS(responsibilities(wrong, m), std::invalid_argument);
}

TEST_CASE("accumulate_chunk on a single sample") {
  const auto m = GmmModel::reset(2, 1);
  const auto data = Dataset::from_rows({{2.0, -3.0}});
  const auto acc = accumulate_chunk(data, {0, 1}, m);
  CHECK(acc.occupancy == std::vector<double>{1.0});
  CHECK(acc.sum_x == std::vector<double>{2.0, -3.0});
  CHECK(acc.sum_xx == std::vector<double>{4.0, 9.0});
  CHECK(acc.n_samples == 1);
  CHECK(acc.log_p_sum == log_p(data.sample(0), m));
  CHECK_THROWS_AS(accumulate_chunk(data, {0, 2}, m), std::invalid_argument);
}

TEST_CASE("accumulators are additive over chunks") {
  std::mt19937_64 rng(4);
  const auto m = oracle::random_model(3, 4, rng);
  const auto data = oracle::random_dataset(5000, 3, rng);
  const BlockGrid grid(data.n_samples());

  // Summing the block grid in order reproduces em_step's reduction bit for bit.
  Accumulators by_blocks(4, 3);
  for (const auto& r : grid.blocks()) by_blocks.add(accumulate_chunk(data, r, m));
  Accumulators reduced;
  em_step(data, m, 1e-10, 3, &reduced);
  CHECK(reduced == by_blocks);

  // Arbitrary split points agree up to rounding.
  const auto whole = accumulate_chunk(data, {0, 5000}, m);
  for (std::size_t cut : {1u, 777u, 2500u, 4999u}) {
    auto parts = accumulate_chunk(data, {0, cut}, m);
    parts.add(accumulate_chunk(data, {cut, 5000}, m));
    CHECK(parts.n_samples == whole.n_samples);
    CHECK(close_vec(parts.occupancy, whole.occupancy, 1e-12));
    CHECK(close_vec(parts.sum_x, whole.sum_x, 1e-10));
    CHECK(close_vec(parts.sum_xx, whole.sum_xx, 1e-12));
    CHECK(oracle::rel_close(parts.log_p_sum, whole.log_p_sum, 1e-12));
  }

  // Against the linear-domain oracle.
  const auto ref = oracle::em_update(data, m);
  CHECK(close_vec(whole.occupancy, ref.occupancy, 1e-12));

  CHECK_THROWS_AS(by_blocks.add(Accumulators(2, 3)), std::invalid_argument);
}

TEST_CASE("reduce_and_update examples") {
  const auto prev = GmmModel::reset(1, 1);
  const auto data = Dataset::from_rows({{0.0}, {2.0}});
  const std::vector<Accumulators> accs = {accumulate_chunk(data, {0, 2}, prev)};
  const auto next = reduce_and_update(accs, prev, 1e-10, 2);
  CHECK(next.hefts()[0] == 1.0);
  CHECK(next.means()[0] == 1.0);
  CHECK(next.dcovs()[0] == 1.0);

  // Identical samples collapse the variance onto the floor.
  const auto same = Dataset::from_rows({{3.0}, {3.0}, {3.0}});
  const std::vector<Accumulators> flat = {accumulate_chunk(same, {0, 3}, prev)};
  CHECK(reduce_and_update(flat, prev, 1e-6, 3).dcovs()[0] == 1e-6);
  CHECK(reduce_and_update(flat, prev, 1e-10, 3).dcovs()[0] == 1e-10);

  CHECK_THROWS_AS(reduce_and_update(std::span<const Accumulators>{}, prev, 1e-10, 2),
                  std::invalid_argument);
  Accumulators empty(1, 1);
  empty.n_samples = 2;
  const std::vector<Accumulators> none = {empty};
  CHECK_THROWS_AS(reduce_and_update(none, prev, 1e-10, 2), FitError);
}

TEST_CASE("a degenerate component keeps its previous mean and covariance") {
  const std::vector<double> hefts = {0.5, 0.5};
  const auto prev = GmmModel::from_params({{0.0}, {1000.0}}, {{1.0}, {2.0}}, hefts);
  const auto data = Dataset::from_rows({{-0.5}, {0.5}, {0.25}});
  const auto next = em_step(data, prev, 1e-10, 1);
  CHECK(next.hefts()[1] == 0.0);
  CHECK(next.hefts()[0] == 1.0);
  CHECK(next.means()[1] == 1000.0);
  CHECK(next.dcovs()[1] == 2.0);
  CHECK(next.means()[0] == doctest::Approx(0.25 / 3.0));
}

TEST_CASE("property: moment form matches the centred update") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n_dims = 1 + seed % 4;
    const std::size_t n_gaus = 1 + seed % 5;
    const auto m = oracle::random_model(n_dims, n_gaus, rng);
    const auto data = oracle::random_dataset(400 + 37 * seed, n_dims, rng);
    const auto next = em_step(data, m, 1e-300, 1 + seed % 3);
    const auto ref = oracle::em_update(data, m);
    CHECK(close_vec(next.hefts(), ref.hefts, 1e-12));
    CHECK(close_vec(next.means(), ref.means, 1e-9));
    CHECK(close_vec(next.dcovs(), ref.dcovs, 1e-9));
  }
}

TEST_CASE("em_fit with zero iterations returns the input") {
  std::mt19937_64 rng(6);
  const auto m = oracle::random_model(2, 2, rng);
  const auto data = oracle::random_dataset(100, 2, rng);
  auto config = quiet_config(2, 0);
  config.em_iter = 0;
  const auto fit = em_fit(data, m, config);
  CHECK(fit.model == m);
  CHECK(fit.report.em_iterations == 0);
  CHECK(fit.report.trace.empty());
  CHECK(fit.report.final_avg_log_p == avg_log_p(data, m));
}

TEST_CASE("em_fit trace semantics") {
  std::mt19937_64 rng(7);
  const auto m = oracle::random_model(2, 3, rng);
  const auto data = oracle::random_dataset(2000, 2, rng);
  auto config = quiet_config(3, 0);
  config.em_iter = 4;
  config.em_rel_tol = 0.0;
  const auto fit = em_fit(data, m, config);
  const auto trace = fit.report.em_trace();
  REQUIRE(trace.size() == 4);
  CHECK(fit.report.initial_avg_log_p == avg_log_p(data, m));

  GmmModel step = m;
  for (std::size_t k = 0; k < 4; ++k) {
    step = em_step(data, step, config.var_floor, 1);
    CHECK(trace[k] == avg_log_p(data, step));
  }
  CHECK(step == fit.model);
  CHECK(fit.report.final_avg_log_p == avg_log_p(data, fit.model));
}

TEST_CASE("property: EM never decreases the average log-likelihood") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto truth = oracle::random_model(3, 3, rng);
    const auto data = generate(truth, 1500, seed);
    auto config = quiet_config(3, seed);
    config.em_iter = 25;
    config.em_rel_tol = 0.0;
    const auto fit = learn(data, config);
    double prev = fit.report.initial_avg_log_p;
    for (double v : fit.report.em_trace()) {
      CHECK(v >= prev - 1e-9 * std::abs(prev));
      prev = v;
    }
    for (double v : fit.model.dcovs()) CHECK(v >= config.var_floor);
  }
}

TEST_CASE("em_fit stops once the relative gain is below the tolerance") {
  const auto data = make_fig1_dataset(3000, 2);
  auto config = quiet_config(2, 1);
  config.em_iter = 500;
  config.em_rel_tol = 1e-8;
  const auto fit = learn(data, config);
  CHECK(fit.report.converged);
  CHECK(fit.report.em_iterations < 500);
  const auto trace = fit.report.em_trace();
  REQUIRE(trace.size() >= 2);
  const double gain = trace[trace.size() - 1] - trace[trace.size() - 2];
  CHECK(gain < 1e-8 * std::abs(trace[trace.size() - 2]));
  CHECK(fit.report.final_avg_log_p == avg_log_p(data, fit.model));
}

TEST_CASE("the variance floor holds throughout training") {
  std::vector<std::vector<double>> rows(300, {1.0, 2.0});
  for (int i = 0; i < 100; ++i) rows.push_back({5.0 + 0.01 * i, -1.0});
  const auto data = Dataset::from_rows(rows);
  auto config = quiet_config(2, 3);
  config.var_floor = 1e-6;
  config.seed_mode = SeedMode::kStaticSpread;
  config.em_iter = 0;
  GmmModel model = learn(data, config).model;
  for (int it = 0; it < 10; ++it) {
    model = em_step(data, model, config.var_floor, 2);
    for (double v : model.dcovs()) CHECK(v >= 1e-6);
  }
}

TEST_CASE("learn recovers the two-cluster mixture") {
  const auto data = make_fig1_dataset(10000, 7);
  auto config = quiet_config(2, 1);
  config.em_iter = 20;
  const auto fit = learn(data, config);
  const auto& m = fit.model;
  const std::size_t big = m.hefts()[0] > m.hefts()[1] ? 0 : 1;
  CHECK(std::abs(m.hefts()[big] - 2.0 / 3.0) < 0.02);
  const auto truth = fig1_true_model();
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(std::abs(m.mean(big)[d] - truth.mean(0)[d]) < 0.1);
    CHECK(std::abs(m.mean(1 - big)[d] - truth.mean(1)[d]) < 0.1);
    CHECK(std::abs(m.dcov(big)[d] - 1.0) < 0.1);
  }
  CHECK(fit.report.km_iterations > 0);
  CHECK(fit.report.em_iterations > 0);
}

TEST_CASE("learn without k-means iterations") {
  std::mt19937_64 rng(12);
  const auto data = oracle::random_dataset(300, 2, rng);
  auto config = quiet_config(3, 0);
  config.km_iter = 0;
  config.em_iter = 0;
  config.seed_mode = SeedMode::kStaticSubset;
  const auto fit = learn(data, config);
  const auto global = oracle::variance(data);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(fit.model.hefts()[g] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(fit.model.mean(g)[0] == data.sample(g * 100)[0]);
    CHECK(close_vec(fit.model.dcov(g), global, 1e-12));
  }
  CHECK(fit.report.km_iterations == 0);
}

TEST_CASE("learn with keep-existing refines the given model") {
  std::mt19937_64 rng(13);
  const auto truth = oracle::random_model(2, 2, rng);
  const auto data = generate(truth, 1000, 1);
  auto config = quiet_config(2, 0);
  config.seed_mode = SeedMode::kKeepExisting;
  config.em_iter = 3;
  config.em_rel_tol = 0.0;
  const auto fit = learn(data, config, truth);
  CHECK(fit.report.km_iterations == 0);
  CHECK(fit.model == em_fit(data, truth, config).model);

  CHECK_THROWS_AS(learn(data, config), std::invalid_argument);
  config.n_gaus = 3;
  CHECK_THROWS_AS(learn(data, config, truth), std::invalid_argument);
}

TEST_CASE("learn input errors and warnings") {
  const auto tiny = Dataset::from_rows({{1.0}, {2.0}, {3.0}});
  auto config = quiet_config(4, 0);
  CHECK_THROWS_AS(learn(tiny, config), InsufficientSamplesError);
  try {
    learn(tiny, config);
  } catch (const InsufficientSamplesError& e) {
    CHECK(std::string(e.what()).find("insufficient samples") != std::string::npos);
  }
  CHECK_THROWS_AS(learn(Dataset(1, {}), config), std::invalid_argument);

  config.n_gaus = 0;
  CHECK_THROWS_AS(learn(tiny, config), std::invalid_argument);
  config = quiet_config(1, 0);
  config.var_floor = 0.0;
  CHECK_THROWS_AS(learn(tiny, config), std::invalid_argument);

  config = quiet_config(2, 0);
  config.em_iter = 2;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({static_cast<double>(i % 2) * 10.0 + 0.1 * i});
  const auto fit = learn(Dataset::from_rows(rows), config);
  CHECK(fit.report.warnings.size() == 1);
}

TEST_CASE("learn is independent of the thread count") {
  std::mt19937_64 rng(14);
  const auto truth = oracle::random_model(4, 5, rng);
  const auto data = generate(truth, 12000, 2);
  auto config = quiet_config(5, 3);
  config.em_iter = 6;
  const auto one = learn(data, config);
  for (std::size_t threads : {2u, 4u, 8u}) {
    config.n_threads = threads;
    const auto many = learn(data, config);
    CHECK(many.model == one.model);
    CHECK(many.report.em_trace() == one.report.em_trace());
  }
}

TEST_CASE("print mode writes one line per iteration") {
  const auto data = make_fig1_dataset(600, 1);
  auto config = quiet_config(2, 0);
  config.km_iter = 3;
  config.em_iter = 2;
  config.em_rel_tol = 0.0;
  config.print_mode = true;
  std::ostringstream out;
  config.progress = &out;
  const auto fit = learn(data, config);
  std::istringstream lines(out.str());
  std::string line;
  std::size_t km = 0, em = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("kmeans iter ", 0) == 0) ++km;
    if (line.rfind("em iter ", 0) == 0) ++em;
    CHECK(line.find("elapsed_ms") != std::string::npos);
  }
  CHECK(km == fit.report.km_iterations);
  CHECK(em == 2);
}

TEST_CASE("init_from_kmeans") {
  const auto data = Dataset::from_rows({{0.0}, {2.0}, {10.0}, {20.0}});
  KmState state = KmState::start(data, {1.0, 10.0, 20.0});
  state.assignment = {0, 0, 1, 2};
  state.counts = {2, 1, 1};
  const std::vector<double> global = {50.0};
  const auto m = init_from_kmeans(data, state, global, 1e-10);
  CHECK(m.hefts()[0] == doctest::Approx(0.5));
  CHECK(m.hefts()[1] == doctest::Approx(0.25));
  CHECK(m.dcovs()[0] == 1.0);
  CHECK(m.dcovs()[1] == 50.0);
  CHECK(m.dcovs()[2] == 50.0);
  CHECK(m.means()[1] == 10.0);

  // A nearly empty cluster keeps a heft floor.
  std::vector<std::vector<double>> rows(1000, {0.0});
  rows.back() = {5.0};
  const auto lopsided = Dataset::from_rows(rows);
  KmState s2 = KmState::start(lopsided, {0.0, 5.0});
  kmeans_iterate(lopsided, s2, DistMode::eucl_sq());
  const auto m2 = init_from_kmeans(lopsided, s2, std::vector<double>{1.0}, 1e-3);
  CHECK(m2.hefts()[1] >= 1.0 / 200.0 / (1.0 + 1.0 / 200.0) - 1e-15);
  CHECK(m2.dcovs()[0] == 1e-3);
  CHECK(std::abs(m2.hefts()[0] + m2.hefts()[1] - 1.0) <= 1e-12);
}
