#include "support.hpp"

#include "qsi/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace qsi;
using namespace qsi::test;

TEST_SUITE("experiments") {

TEST_CASE("subset enumeration sizes") {
  SweepConfig cfg;
  CHECK(sweep_subsets(6, cfg).size() == 63);
  CHECK(sweep_subsets(10, cfg).size() == 1023);
  CHECK(sweep_subsets(14, cfg).size() == 16383);
  cfg.max_subset_size = 3;
  CHECK(sweep_subsets(14, cfg).size() == 14 + 91 + 364);
  cfg.max_subset_size = 0;
  CHECK_THROWS_AS(sweep_subsets(31, cfg), GuardError);
  cfg.sample_per_size = 20;
  auto sampled = sweep_subsets(31, cfg);
  // At most 20 per size: sizes 1..30 all have more than 20 subsets, size 31 has one.
  CHECK(sampled.size() == 20 * 30 + 1);
  CHECK(std::set(sampled.begin(), sampled.end()).size() == sampled.size());
  CHECK(sweep_subsets(31, cfg) == sampled);
}

TEST_CASE("random states") {
  const auto& u = builtin(SystemId::utube);
  auto vars = u.measured_variables();
  CHECK(measured_space(vars).size() == 2025);
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 20; ++i) CHECK(random_state(vars, {}, a) == random_state(vars, {}, b));

  std::mt19937_64 rng(7);
  std::map<std::string, std::array<int, 3>> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto s = random_state(vars, {}, rng);
    for (const auto& [name, v] : s.bindings) {
      CHECK(oracle_domain_ok(u.target.at(name).domain, v));
      ++counts[name][static_cast<int>(v.mag)];
    }
  }
  // Magnitude frequencies follow the domain-valid value counts: nonnegative variables have one
  // zero value (zero/dec is excluded) and three positive ones; unrestricted ones three of each.
  for (const auto& [name, c] : counts) {
    const bool nonneg = u.target.at(name).domain == Domain::nonnegative;
    const std::array<double, 3> p = nonneg ? std::array{0.0, 2.0 / 5, 3.0 / 5} : std::array{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double chi = 0;
    int cells = 0;
    for (int k = 0; k < 3; ++k) {
      if (p[k] == 0) {
        CHECK(c[k] == 0);
        continue;
      }
      double e = n * p[k];
      chi += (c[k] - e) * (c[k] - e) / e;
      ++cells;
    }
    // 99.9% quantile of chi-square with 1 or 2 degrees of freedom.
    CHECK(chi < (cells == 2 ? 10.83 : 13.82));
  }
  const auto& k = builtin(SystemId::cascaded);
  auto s = random_state(k.measured_variables(), k.exogenous, rng);
  CHECK(s.get("qi") == qv("pos/std"));
  CHECK_THROWS_AS(random_state(k.measured_variables(), {}, rng), ContractViolation);
}

TEST_CASE("u-tube noise-free sweep") {
  SweepConfig cfg;
  auto records = sweep_noise_free(cfg);
  REQUIRE(records.size() == 63);
  auto kernels = minimal_perfect_subsets(records);
  std::vector<std::vector<int>> want{{2, 3}, {2, 4}, {2, 5}, {3, 5}, {3, 6}, {4, 5}, {4, 6}, {5, 6}};
  CHECK(kernels == want);
  for (const auto& r : records) {
    if (r.subset.size() == 1) CHECK(r.precision < 1.0);
    for (const auto& k : want) {
      if (std::includes(r.subset.begin(), r.subset.end(), k.begin(), k.end())) CHECK(r.precision == 1.0);
    }
  }
  auto curve = size_averages(records, 6);
  REQUIRE(curve.size() == 6);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].avg_precision >= curve[i - 1].avg_precision);
  CHECK(curve.back().avg_precision == 1.0);

  cfg.jobs = 3;
  auto parallel = sweep_noise_free(cfg);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parallel[i].subset == records[i].subset);
    CHECK(parallel[i].precision == records[i].precision);
  }
}

TEST_CASE("u-tube noisy sweep") {
  SweepConfig cfg;
  cfg.mode = SweepMode::noisy;
  CHECK(cfg.effective_theta() == doctest::Approx(0.7));
  auto records = sweep_noisy(cfg);
  REQUIRE(records.size() == 63);
  for (const auto& r : records) CHECK(r.k == r.subset.size());

  // With nothing replaced the training set is the whole envisionment.
  auto all = builtin(SystemId::utube).search_config(cfg.effective_theta());
  auto full = shared_index(all).search(builtin(SystemId::utube).truth_states(), all);
  CHECK(precision(full.models, builtin(SystemId::utube).target) == 1.0);

  auto again = sweep_noisy(cfg);
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(again[i].precision == records[i].precision);

  double small = 0, large = 0;
  std::size_t ns = 0, nl = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    for (const auto& r : sweep_noisy(cfg)) {
      if (r.k <= 2) {
        small += r.precision;
        ++ns;
      } else if (r.k >= 4) {
        large += r.precision;
        ++nl;
      }
    }
  }
  CHECK(small / ns > large / nl);
}

TEST_CASE("kernel search restricted by size") {
  auto k = find_kernels(SystemId::utube, 2);
  CHECK(k.size() == 8);
  for (const auto& s : k) CHECK(s.size() == 2);
}

TEST_CASE("seeds are derived deterministically") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("parallel_for visits every index once") {
  for (std::size_t jobs : {1, 2, 4}) {
    std::vector<int> hits(100);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("quantitative experiment on the u-tube") {
  QuantConfig cfg;
  auto rep = quantitative_experiment(cfg);
  REQUIRE(rep.rows.size() == 12);
  REQUIRE(rep.levels.size() == 4);
  CHECK(rep.levels[0].precision > 0.0);
  for (const auto& r : rep.rows) CHECK(r.true_states + r.false_states == r.states);
}

}  // TEST_SUITE
