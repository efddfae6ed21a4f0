#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fairlime/error.hpp"
#include "fairlime/experiments.hpp"

using namespace fairlime;

namespace {

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), std::uint64_t{0});
  return s;
}

const TabularDataset& sweep_data() {
  static const TabularDataset ds = [] {
    SyntheticConfig cfg;
    cfg.n_rows = 4000;
    return generate_synthetic(cfg);
  }();
  return ds;
}

}  // namespace

TEST_CASE("strided points") {
  CHECK(strided_points(10, 5) == std::vector<std::size_t>{0, 2, 4, 6, 8});
  CHECK(strided_points(4, 0) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(strided_points(3, 10) == std::vector<std::size_t>{0, 1, 2});
  const auto p = strided_points(10000, 200);
  CHECK(p.size() == 200);
  CHECK(p[1] == 50);
  CHECK(p.back() == 9950);
}

TEST_CASE("boundary report is internally consistent") {
  SyntheticConfig cfg;
  cfg.n_rows = 3000;
  const BoundaryReport r = run_boundary_experiment(cfg, KernelConfig::defaults(3, 1000), seeds(5));
  CHECK(r.seeds == seeds(5));
  CHECK(r.explanations == 5 * 2 * kPanelSize);
  CHECK(r.per_seed_boundary.size() == r.used_seeds.size());
  CHECK(r.per_seed_group0.size() == r.used_seeds.size());
  double sum = 0.0;
  for (double b : r.per_seed_boundary) sum += b;
  CHECK(r.mean_boundary == doctest::Approx(sum / static_cast<double>(r.per_seed_boundary.size())));
  CHECK(r.majority_boundary == 5.0);
  CHECK(r.minority_boundary == 6.0);
  CHECK(r.midpoint == 5.5);
  CHECK(r.closer_to_majority ==
        (std::abs(r.mean_boundary - 5.0) < std::abs(r.mean_boundary - 6.0)));
  CHECK(r.mean_group0 > r.mean_group1);

  CHECK_THROWS_AS(run_boundary_experiment(cfg, KernelConfig::defaults(3, 1000), seeds(4)), Error);
}

TEST_CASE("boundary experiment is deterministic and thread independent") {
  SyntheticConfig cfg;
  cfg.n_rows = 2000;
  const auto kc = KernelConfig::defaults(3, 500);
  const BoundaryReport a = run_boundary_experiment(cfg, kc, seeds(5), Execution::parallel);
  const BoundaryReport b = run_boundary_experiment(cfg, kc, seeds(5), Execution::serial);
  CHECK(a == b);
}

TEST_CASE("swapping the minority mirrors the boundary") {
  SyntheticConfig cfg;
  cfg.boundary_majority = 6.0;
  cfg.boundary_minority = 5.0;
  const BoundaryReport r = run_boundary_experiment(cfg, KernelConfig::defaults(3, 5000), seeds(20));
  MESSAGE("mirrored mean boundary " << r.mean_boundary);
  CHECK(r.mean_boundary > 5.5);
  CHECK(std::abs(r.mean_boundary - 6.0) < std::abs(r.mean_boundary - 5.0));
  CHECK(r.closer_to_majority);
}

TEST_CASE("sweep report shape and pairing") {
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  cfg.lambda2 = 5.0;
  SweepOptions opts;
  opts.n_points = 20;
  const std::vector<std::size_t> counts = {100, 300};
  const SweepReport r = run_perturbation_sweep(sweep_data(), oracle, counts, cfg, seeds(3), opts);
  CHECK(r.counts == counts);
  CHECK(r.n_points == 20);
  REQUIRE(r.vanilla.size() == 2);
  REQUIRE(r.fair.size() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(r.vanilla[c].n_seeds == 3);
    CHECK(r.fair[c].n_seeds == 3);
    CHECK(r.explained[c] + r.skipped[c] == 3 * 20);
    CHECK(r.fair[c].mean_psi <= r.vanilla[c].mean_psi);
  }
  SweepOptions serial = opts;
  serial.exec = Execution::serial;
  CHECK(run_perturbation_sweep(sweep_data(), oracle, counts, cfg, seeds(3), serial) == r);
}

TEST_CASE("with lambda2 = 0 both sweep curves coincide") {
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  cfg.lambda2 = 0.0;
  SweepOptions opts;
  opts.n_points = 30;
  const SweepReport r = run_perturbation_sweep(sweep_data(), oracle, {100, 200, 500}, cfg, seeds(4), opts);
  for (std::size_t c = 0; c < r.counts.size(); ++c) CHECK(r.vanilla[c] == r.fair[c]);
}

TEST_CASE("sweep argument checks") {
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  CHECK_THROWS_AS(run_perturbation_sweep(sweep_data(), oracle, {40, 100}, cfg, seeds(1)), Error);
  CHECK_THROWS_AS(run_perturbation_sweep(sweep_data(), oracle, {200, 100}, cfg, seeds(1)), Error);
  CHECK_THROWS_AS(run_perturbation_sweep(sweep_data(), oracle, {}, cfg, seeds(1)), Error);
  CHECK_THROWS_AS(run_perturbation_sweep(sweep_data(), oracle, {100}, cfg, {}), Error);
  const BlackBoxModel narrow(OracleModel{2, 0, 1, 0.5, 0.5});
  CHECK_THROWS_AS(run_perturbation_sweep(sweep_data(), narrow, {100}, cfg, seeds(1)), Error);
}

TEST_CASE("vanilla mismatch flattens between 1000 and 2000 perturbations") {
  SyntheticConfig sc;
  const TabularDataset ds = generate_synthetic(sc);
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  cfg.lambda2 = 0.0;
  const SweepReport r = run_perturbation_sweep(ds, oracle, {1000, 2000}, cfg, seeds(20));
  const double at1000 = r.vanilla[0].mean_psi;
  const double at2000 = r.vanilla[1].mean_psi;
  MESSAGE("vanilla psi at 1000: " << at1000 << ", at 2000: " << at2000);
  CHECK(std::abs(at2000 - at1000) <= 0.2 * at1000);
}
