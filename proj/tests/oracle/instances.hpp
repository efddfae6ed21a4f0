#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/dataset.hpp"
#include "fairlime/fair_objective.hpp"
#include "fairlime/neighborhood.hpp"
#include "grid_search_oracle.hpp"

namespace fairlime::testing {

// Two features: group g and x ~ U(0,1). The oracle flips at x = 0.6 for
// group 0 and x = 0.4 for group 1.
struct TwoFeatureWorld {
  TabularDataset ds;
  FeatureStats stats;
  BlackBoxModel model{OracleModel{2, 0, 1, 0.6, 0.4}};

  explicit TwoFeatureWorld(std::uint64_t seed = 11, std::size_t n = 2000) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ds.feature_names = {"g", "x"};
    ds.feature_kinds = {FeatureKind::binary, FeatureKind::continuous};
    ds.group_col = 0;
    ds.rows = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      ds.rows(i, 0) = unit(rng) < 0.5 ? 0.0 : 1.0;
      ds.rows(i, 1) = unit(rng);
    }
    stats = feature_stats(ds);
  }

  std::vector<double> center(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double g = unit(rng) < 0.5 ? 0.0 : 1.0;
    return {g, 0.2 + 0.6 * unit(rng)};
  }
};

// Linearly separable: g ~ Bern(0.5), x ~ U(-2, 2), label 1 iff x + 0.5 g > 0.2.
inline TabularDataset separable_dataset(std::uint64_t seed = 3, std::size_t n = 2000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TabularDataset ds;
  ds.feature_names = {"g", "x"};
  ds.feature_kinds = {FeatureKind::binary, FeatureKind::continuous};
  ds.group_col = 0;
  ds.label_name = "y";
  ds.rows = Matrix(n, 2);
  ds.labels.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = unit(rng) < 0.5 ? 0.0 : 1.0;
    const double x = -2.0 + 4.0 * unit(rng);
    ds.rows(i, 0) = g;
    ds.rows(i, 1) = x;
    (*ds.labels)[i] = x + 0.5 * g > 0.2 ? 1 : 0;
  }
  return ds;
}

inline double training_accuracy(const BlackBoxModel& m, const TabularDataset& ds) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) hits += m.predict(ds.rows.row(i)) == (*ds.labels)[i];
  return static_cast<double>(hits) / static_cast<double>(ds.n_rows());
}

// Search box for the oracle comparison: w_g in [-1, 1], w_x in [-0.5, 3].
// With exact_intercept the intercept range is unused.
inline GridSpec two_feature_grid(double resolution = 0.01, bool exact_intercept = true) {
  GridSpec spec = GridSpec::uniform(resolution, {{-1.0, 1.0}, {-0.5, 3.0}}, {-1.5, 2.0});
  spec.exact_intercept = exact_intercept;
  return spec;
}

// Solver settings used against the grid oracle.
inline FairObjectiveConfig oracle_comparison_config() {
  FairObjectiveConfig cfg;
  cfg.lambda2 = 5.0;
  cfg.tau = 0.001;
  cfg.restarts = 16;
  return cfg;
}

}  // namespace fairlime::testing
