#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/dataset.hpp"
#include "fairlime/neighborhood.hpp"

namespace fairlime {

// Ridge added to the active-set normal equations for conditioning. It is not
// part of the complexity term.
inline constexpr double kRidgeDamping = 1e-8;

/// Sparse linear model g(z) = w . z + b. Weights outside `active_set` are
/// exactly zero.
struct LinearSurrogate {
  std::vector<double> weights;
  double intercept = 0.0;
  std::vector<std::size_t> active_set;

  friend bool operator==(const LinearSurrogate&, const LinearSurrogate&) = default;
};

double surrogate_score(const LinearSurrogate& g, std::span<const double> z);
int surrogate_predict(const LinearSurrogate& g, std::span<const double> z);

/// Weighted mean squared error between black-box scores and surrogate
/// scores over the neighborhood.
double fidelity_loss(const LinearSurrogate& g, const Neighborhood& nb);

/// Number of nonzero weights.
double complexity(const LinearSurrogate& g);

/// Feature value where the surrogate crosses 0.5 with every other feature
/// held at `center`. Throws when the feature's weight is zero.
double implied_boundary(const LinearSurrogate& g, std::size_t feature,
                        std::span<const double> center);

struct ObjectiveBreakdown {
  double fidelity = 0.0;
  double complexity = 0.0;
  // Hard demographic-parity mismatch on the neighborhood; empty when the
  // neighborhood holds a single group.
  std::optional<double> fairness;
};

struct Explanation {
  LinearSurrogate surrogate;
  std::vector<double> center;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau = 0.0;
  std::size_t n_perturbations = 0;
  std::uint64_t seed = 0;
  ObjectiveBreakdown objective;
  std::optional<double> psi_smooth;
  std::size_t restart_count = 0;
};

struct LimeConfig {
  KernelConfig kernel;
  std::size_t max_features = 5;
  std::size_t group_col = 0;
  bool freeze_group = false;
  Execution exec = Execution::parallel;

  SamplingOptions sampling() const { return {group_col, freeze_group, exec}; }
};

/// Greedy forward selection of up to `max_features` features by weighted
/// squared-error reduction, then weighted least squares on the selected set.
LinearSurrogate fit_lime(const Neighborhood& nb, std::size_t max_features);

/// Weighted least squares restricted to `active` (may be empty: intercept
/// only). Features with an exactly zero fitted weight leave the active set.
LinearSurrogate fit_weighted_least_squares(const Neighborhood& nb,
                                           const std::vector<std::size_t>& active);

/// Vanilla local surrogate explanation (no fairness term, lambda2 = 0).
Explanation lime_explain(const BlackBoxModel& f, std::span<const double> x,
                         const FeatureStats& stats, const LimeConfig& cfg, std::uint64_t seed);

/// Explanation for an already sampled neighborhood.
Explanation explain_neighborhood(const Neighborhood& nb, std::size_t max_features);

}  // namespace fairlime
