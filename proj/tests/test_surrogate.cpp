#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fairlime/blackbox.hpp"
#include "fairlime/error.hpp"
#include "fairlime/surrogate.hpp"
#include "test_util.hpp"

using namespace fairlime;
using fairlime::testing::manual_neighborhood;

namespace {

FeatureStats two_feature_stats(double x_std) {
  FeatureStats st;
  st.mean = {0.5, 0.0};
  st.stddev = {0.5, x_std};
  st.one_frequency = {0.5, std::nan("")};
  st.kinds = {FeatureKind::binary, FeatureKind::continuous};
  return st;
}

double intercept_only_fidelity(const Neighborhood& nb) {
  double sw = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    sw += nb.weights[i];
    sy += nb.weights[i] * nb.f_scores[i];
  }
  LinearSurrogate g{std::vector<double>(nb.n_features(), 0.0), sy / sw, {}};
  return fidelity_loss(g, nb);
}

}  // namespace

TEST_CASE("fidelity of an exact reproduction is zero") {
  // f(z) = 0.2 * z1 + 0.1
  const Neighborhood nb = manual_neighborhood({{0, 1}, {1, 2}, {0, -1}, {1, 0.5}},
                                              {0.3, 0.5, -0.1, 0.2}, {1, 0.5, 0.25, 2});
  const LinearSurrogate g{{0.0, 0.2}, 0.1, {1}};
  CHECK(fidelity_loss(g, nb) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("fidelity of the mean is the weighted variance") {
  const Neighborhood nb =
      manual_neighborhood({{0, 1}, {1, 2}, {0, 3}, {1, 4}}, {0.1, 0.4, 0.7, 1.0}, {1, 1, 1, 1});
  // mean 0.55; deviations 0.45, 0.15, 0.15, 0.45; variance (2*0.2025 + 2*0.0225)/4 = 0.1125
  const LinearSurrogate g{{0.0, 0.0}, 0.55, {}};
  CHECK(fidelity_loss(g, nb) == doctest::Approx(0.1125));
}

TEST_CASE("complexity counts nonzero weights") {
  CHECK(complexity(LinearSurrogate{{0, 0, 0, 0, 0}, 0.3, {}}) == 0.0);
  CHECK(complexity(LinearSurrogate{{0, 1.5, 0, -0.2, 0}, 0.3, {1, 3}}) == 2.0);
}

TEST_CASE("surrogate score and predict") {
  const LinearSurrogate flat{{0, 0, 0}, 0.7, {}};
  CHECK(surrogate_predict(flat, std::vector<double>{-100, 3, 1e6}) == 1);
  const LinearSurrogate g{{0, 0, 1}, -5.0, {2}};
  CHECK(surrogate_score(g, std::vector<double>{1, 2, 5.6}) == doctest::Approx(0.6));
  CHECK(surrogate_predict(g, std::vector<double>{1, 2, 5.6}) == 1);
  CHECK_THROWS_AS(surrogate_score(g, std::vector<double>{1, 2}), Error);
}

TEST_CASE("implied boundary") {
  const LinearSurrogate g{{0, 0, 1}, -5.0, {2}};
  CHECK(implied_boundary(g, 2, std::vector<double>{0, 0, 0}) == doctest::Approx(5.5));
  for (double c : {0.1, 0.5, 3.0, 40.0}) {
    LinearSurrogate s{{0.3 * c, -0.2 * c, 1.0 * c}, 0.5 + c * (-5.0 - 0.5), {0, 1, 2}};
    const std::vector<double> center = {1, 2, 0};
    LinearSurrogate base{{0.3, -0.2, 1.0}, -5.0, {0, 1, 2}};
    CHECK(implied_boundary(s, 2, center) == doctest::Approx(implied_boundary(base, 2, center)));
  }
  CHECK_THROWS_AS(implied_boundary(g, 1, std::vector<double>{0, 0, 0}), Error);
  CHECK_THROWS_AS(implied_boundary(g, 5, std::vector<double>{0, 0, 0}), Error);
}

TEST_CASE("constant black box gives a flat surrogate at its value") {
  const BlackBoxModel half(LogisticModel{{0.0, 0.0}, 0.0});
  LimeConfig cfg;
  cfg.kernel = KernelConfig::defaults(2, 1000);
  const Explanation e = lime_explain(half, std::vector<double>{1, 0.3}, two_feature_stats(1.0), cfg, 3);
  CHECK(e.surrogate.weights == std::vector<double>{0.0, 0.0});
  CHECK(e.surrogate.active_set.empty());
  CHECK(e.surrogate.intercept == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.objective.complexity == 0.0);
}

TEST_CASE("one-dimensional step recovers its boundary") {
  for (double t : {-1.0, 0.0, 2.5}) {
    const BlackBoxModel step(OracleModel{2, 0, 1, t, t});
    LimeConfig cfg;
    cfg.kernel = KernelConfig::defaults(2, 5000);
    cfg.freeze_group = true;
    const std::vector<double> x = {1, t};
    const Explanation e = lime_explain(step, x, two_feature_stats(1.0), cfg, 11);
    REQUIRE(e.surrogate.weights[1] != 0.0);
    CHECK(e.surrogate.weights[0] == 0.0);
    CHECK(std::abs(implied_boundary(e.surrogate, 1, x) - t) <= 0.15);
  }
}

TEST_CASE("lime_explain is deterministic and fills its record") {
  SyntheticConfig sc;
  sc.n_rows = 2000;
  const TabularDataset ds = generate_synthetic(sc);
  const FeatureStats st = feature_stats(ds);
  const BlackBoxModel f(OracleModel{});
  LimeConfig cfg;
  cfg.kernel = KernelConfig::defaults(3, 1500);
  const std::vector<double> x = {0, 0.1, 5.6};
  const Explanation a = lime_explain(f, x, st, cfg, 8);
  const Explanation b = lime_explain(f, x, st, cfg, 8);
  CHECK(a.surrogate == b.surrogate);
  CHECK(a.seed == 8);
  CHECK(a.n_perturbations == 1500);
  CHECK(a.center == x);
  CHECK(a.lambda2 == 0.0);
  CHECK(a.objective.fairness.has_value());
}

TEST_CASE("fitted surrogates beat the intercept-only fit and respect the budget") {
  SyntheticConfig sc;
  sc.n_rows = 3000;
  const TabularDataset ds = generate_synthetic(sc);
  const FeatureStats st = feature_stats(ds);
  const std::vector<BlackBoxModel> models = {BlackBoxModel(OracleModel{}),
                                             BlackBoxModel(LogisticModel{{-0.8, 0.3, 1.2}, -6.0})};
  for (const BlackBoxModel& f : models)
    for (std::size_t k = 1; k <= 3; ++k)
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto row = ds.rows.row(seed * 97);
        const std::vector<double> x(row.begin(), row.end());
        const Neighborhood nb = sample_neighborhood(x, st, f, KernelConfig::defaults(3, 600), seed);
        const LinearSurrogate g = fit_lime(nb, k);
        CHECK(complexity(g) <= static_cast<double>(k));
        CHECK(g.active_set.size() <= k);
        for (std::size_t j = 0; j < g.weights.size(); ++j) {
          const bool active = std::find(g.active_set.begin(), g.active_set.end(), j) != g.active_set.end();
          if (!active) CHECK(g.weights[j] == 0.0);
        }
        CHECK(fidelity_loss(g, nb) <= intercept_only_fidelity(nb) + 1e-12);
      }
}

TEST_CASE("weighted least squares reproduces a linear target") {
  std::vector<std::vector<double>> rows;
  std::vector<double> scores, weights;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double g = i % 2, x = normal(rng);
    rows.push_back({g, x});
    scores.push_back(0.3 - 0.2 * g + 0.15 * x);
    weights.push_back(0.5 + 0.5 * std::exp(-x * x));
  }
  const Neighborhood nb = manual_neighborhood(rows, scores, weights);
  const LinearSurrogate g = fit_weighted_least_squares(nb, {0, 1});
  CHECK(g.weights[0] == doctest::Approx(-0.2).epsilon(1e-6));
  CHECK(g.weights[1] == doctest::Approx(0.15).epsilon(1e-6));
  CHECK(g.intercept == doctest::Approx(0.3).epsilon(1e-6));
  const LinearSurrogate flat = fit_weighted_least_squares(nb, {});
  CHECK(flat.weights == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(fit_lime(nb, 0), Error);
}
