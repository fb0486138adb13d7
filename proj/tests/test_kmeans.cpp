#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gmmdiag/gmmdiag.hpp"
#include "oracles.hpp"

using namespace gmmdiag;

namespace {

// Two tight clusters around -5 and +5 on every axis.
Dataset two_clusters(std::size_t per_cluster, std::size_t n_dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> values;
  for (std::size_t i = 0; i < 2 * per_cluster; ++i) {
    const double centre = (i % 2 == 0) ? -5.0 : 5.0;
    for (std::size_t d = 0; d < n_dims; ++d) values.push_back(centre + noise(rng));
  }
  return Dataset(n_dims, std::move(values));
}

}  // namespace

TEST_CASE("global_diag_cov") {
  const auto data = Dataset::from_rows({{0.0, 1.0}, {2.0, 1.0}});
  const auto var = global_diag_cov(data);
  CHECK(var[0] == 1.0);
  CHECK(var[1] == kGlobalVarFloor);
  CHECK_THROWS_AS(global_diag_cov(Dataset::from_rows({{1.0}})), std::invalid_argument);

  std::mt19937_64 rng(1);
  const auto big = oracle::random_dataset(7000, 3, rng, -10.0, 30.0);
  const auto expected = oracle::variance(big);
  const auto got = global_diag_cov(big, 3);
  for (std::size_t d = 0; d < 3; ++d) CHECK(oracle::rel_close(got[d], expected[d], 1e-12));
  CHECK(global_diag_cov(big, 1) == got);
}

TEST_CASE("dist examples") {
  const std::vector<double> a = {0.0, 0.0}, b = {3.0, 4.0};
  CHECK(dist(a, b, DistMode::eucl_sq()) == 25.0);
  CHECK(dist(a, b, DistMode::maha_diag({1.0, 0.25})) == 9.0 + 4.0);
  CHECK(dist(b, b, DistMode::eucl_sq()) == 0.0);

  const std::vector<double> c = {1.0};
  CHECK_THROWS_AS(dist(a, c, DistMode::eucl_sq()), std::invalid_argument);
  CHECK_THROWS_AS(dist(a, b, DistMode::maha_diag({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(DistMode::maha_diag({1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DistMode::maha_diag({1.0, std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
}

TEST_CASE("seed_indices") {
  const auto eucl = DistMode::eucl_sq();
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
  const auto line = Dataset::from_rows(rows);

  CHECK(seed_indices(line, 2, SeedMode::kStaticSubset, eucl, 0) ==
        std::vector<std::size_t>{0, 5});
  CHECK(seed_indices(line, 3, SeedMode::kStaticSubset, eucl, 0) ==
        std::vector<std::size_t>{0, 3, 6});

  std::vector<std::vector<double>> spread_rows;
  for (int i = 0; i < 101; ++i) spread_rows.push_back({static_cast<double>(i)});
  const auto spread = Dataset::from_rows(spread_rows);
  CHECK(seed_indices(spread, 2, SeedMode::kStaticSpread, eucl, 0) ==
        std::vector<std::size_t>{0, 100});
  CHECK(seed_indices(spread, 3, SeedMode::kStaticSpread, eucl, 0) ==
        std::vector<std::size_t>{0, 100, 50});

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto idx = seed_indices(line, 4, SeedMode::kRandomSubset, eucl, seed);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 4);
    for (std::size_t i : idx) CHECK(i < 10);
    CHECK(seed_indices(line, 4, SeedMode::kRandomSubset, eucl, seed) == idx);
  }

  CHECK_THROWS_AS(seed_indices(line, 11, SeedMode::kStaticSubset, eucl, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(seed_indices(line, 0, SeedMode::kStaticSubset, eucl, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(seed_indices(line, 2, SeedMode::kKeepExisting, eucl, 0),
                  std::invalid_argument);

  // Identical samples still yield distinct indices.
  const auto same = Dataset::from_rows({{1.0}, {1.0}, {1.0}});
  for (auto mode : {SeedMode::kStaticSpread, SeedMode::kRandomSpread}) {
    const auto idx = seed_indices(same, 3, mode, eucl, 4);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 3);
  }
}

TEST_CASE("random spread seeding hits every well-separated cluster") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> values;
  const std::vector<double> centres = {-100.0, 0.0, 100.0};
  for (std::size_t i = 0; i < 300; ++i) values.push_back(centres[i % 3] + noise(rng));
  const Dataset data(1, std::move(values));

  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::set<std::size_t> clusters;
    for (std::size_t i : seed_indices(data, 3, SeedMode::kRandomSpread, DistMode::eucl_sq(), seed)) {
      clusters.insert(i % 3);
    }
    if (clusters.size() == 3) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("kmeans_iterate on a small line") {
  const auto data = Dataset::from_rows({{0.0}, {1.0}, {9.0}, {10.0}});
  auto state = KmState::start(data, {0.0, 10.0});
  kmeans_iterate(data, state, DistMode::eucl_sq());
  CHECK(state.means == std::vector<double>{0.5, 9.5});
  CHECK(state.counts == std::vector<std::size_t>{2, 2});
  CHECK(state.assignment == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK(state.objective == 2.0);
  CHECK(state.n_changed == 4);

  kmeans_iterate(data, state, DistMode::eucl_sq());
  CHECK(state.n_changed == 0);
  CHECK(state.objective == 1.0);

  // A tie goes to the lower index.
  const auto mid = Dataset::from_rows({{5.0}});
  auto tie = KmState::start(mid, {0.0, 10.0});
  kmeans_iterate(mid, tie, DistMode::eucl_sq());
  CHECK(tie.assignment[0] == 0);
}

TEST_CASE("a single mean converges to the centroid") {
  std::mt19937_64 rng(2);
  const auto data = oracle::random_dataset(500, 3, rng);
  KmeansOptions options;
  options.max_iter = 5;
  const auto result = run_kmeans(data, {100.0, 100.0, 100.0}, DistMode::eucl_sq(), options);
  CHECK(result.iterations == 2);
  CHECK(result.converged);
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < data.n_samples(); ++i) mean += data.sample(i)[d];
    mean /= 500.0;
    CHECK(oracle::rel_close(result.state.means[d], mean, 1e-12));
  }
}

TEST_CASE("kmeans is independent of the thread count") {
  std::mt19937_64 rng(3);
  const auto data = oracle::random_dataset(9000, 4, rng);
  const auto mode = DistMode::for_data(DistKind::kMahaDiag, data);
  const auto seeds = seed_means(data, 6, SeedMode::kRandomSubset, mode, 1);
  KmeansOptions options;
  options.max_iter = 8;
  const auto one = run_kmeans(data, seeds, mode, options);
  for (std::size_t threads : {2u, 3u, 7u}) {
    options.n_threads = threads;
    const auto many = run_kmeans(data, seeds, mode, options);
    CHECK(many.state.means == one.state.means);
    CHECK(many.state.assignment == one.state.assignment);
    CHECK(many.objective_trace == one.objective_trace);
  }
}

TEST_CASE("resurrect_dead_means") {
  const auto data = Dataset::from_rows({{0.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0}, {3.0, 0.0}});
  auto state = KmState::start(data, {0.75, 0.0, 50.0, 50.0});
  kmeans_iterate(data, state, DistMode::eucl_sq());
  REQUIRE(state.counts == std::vector<std::size_t>{4, 0});

  CHECK(resurrect_dead_means(data, state, DistMode::eucl_sq()) == 1);
  CHECK(state.counts == std::vector<std::size_t>{3, 1});
  CHECK(state.means[2] == 3.0);
  CHECK(state.means[3] == 0.0);
  CHECK(state.assignment[3] == 1);

  CHECK(resurrect_dead_means(data, state, DistMode::eucl_sq()) == 0);
  CHECK(state.counts == std::vector<std::size_t>{3, 1});

  // A single-member donor gives up its member.
  const auto pair = Dataset::from_rows({{0.0}, {0.0}});
  auto lone = KmState::start(pair, {0.0, 9.0});
  lone.counts = {1, 0};
  lone.assignment = {0, KmState::kUnassigned};
  CHECK(resurrect_dead_means(pair, lone, DistMode::eucl_sq()) == 1);
  CHECK(lone.counts == std::vector<std::size_t>{0, 1});
  CHECK(lone.means[1] == 0.0);
}

TEST_CASE("run_kmeans separates two clusters") {
  const auto data = two_clusters(200, 2, 5);
  FitConfig config;
  config.n_gaus = 2;
  config.km_iter = 10;
  config.seed_mode = SeedMode::kStaticSpread;
  const auto result = run_kmeans(data, config);
  CHECK(result.converged);
  CHECK(result.state.counts == std::vector<std::size_t>{200, 200});
  auto means = result.state.means;
  CHECK(std::abs(means[0] + 5.0) < 0.2);
  CHECK(std::abs(means[2] - 5.0) < 0.2);

  config.km_iter = 0;
  const auto none = run_kmeans(data, config);
  CHECK(none.iterations == 0);
  CHECK(none.objective_trace.empty());
  CHECK(none.state.means == seed_means(data, 2, SeedMode::kStaticSpread,
                                       DistMode::for_data(DistKind::kMahaDiag, data), 0));

  config.seed_mode = SeedMode::kKeepExisting;
  CHECK_THROWS_AS(run_kmeans(data, config), std::invalid_argument);
}

TEST_CASE("property: the objective never increases and counts cover the data") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto data = oracle::random_dataset(800, 3, rng);
    FitConfig config;
    config.n_gaus = 7;
    config.km_iter = 15;
    config.rng_seed = seed;
    config.dist_mode = seed % 2 ? DistKind::kEuclSq : DistKind::kMahaDiag;
    const auto result = run_kmeans(data, config);
    for (std::size_t k = 1; k < result.objective_trace.size(); ++k) {
      CHECK(result.objective_trace[k] <= result.objective_trace[k - 1] * (1.0 + 1e-12));
    }
    const auto& counts = result.state.counts;
    CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == data.n_samples());
    for (std::size_t c : counts) CHECK(c > 0);
  }
}

TEST_CASE("Mahalanobis partitions ignore per-axis scaling") {
  std::mt19937_64 rng(41);
  const auto data = oracle::random_dataset(1000, 3, rng);
  std::vector<double> scaled_values(data.values().begin(), data.values().end());
  const std::vector<double> scale = {1000.0, 0.001, 7.0};
  for (std::size_t i = 0; i < scaled_values.size(); ++i) scaled_values[i] *= scale[i % 3];
  const Dataset scaled(3, std::move(scaled_values));

  FitConfig config;
  config.n_gaus = 4;
  config.km_iter = 20;
  config.rng_seed = 9;
  config.dist_mode = DistKind::kMahaDiag;
  CHECK(run_kmeans(data, config).state.assignment ==
        run_kmeans(scaled, config).state.assignment);
}

TEST_CASE("Mahalanobis with unit variances equals Euclidean") {
  std::mt19937_64 rng(43);
  const auto data = oracle::random_dataset(600, 2, rng);
  const auto seeds = seed_means(data, 3, SeedMode::kStaticSubset, DistMode::eucl_sq(), 0);
  KmeansOptions options;
  options.max_iter = 10;
  const auto eucl = run_kmeans(data, seeds, DistMode::eucl_sq(), options);
  const auto maha = run_kmeans(data, seeds, DistMode::maha_diag({1.0, 1.0}), options);
  CHECK(eucl.state.means == maha.state.means);
  CHECK(eucl.state.assignment == maha.state.assignment);
}
