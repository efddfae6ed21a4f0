#pragma once

#include <cstddef>
#include <vector>

#include "fairlime/fair_objective.hpp"
#include "fairlime/neighborhood.hpp"
#include "fairlime/surrogate.hpp"

namespace fairlime::testing {

// Inclusive range lo..hi, in units of the grid resolution.
struct GridAxis {
  long lo = 0;
  long hi = 0;
};

struct GridSpec {
  double resolution = 0.01;
  // One axis per active feature, in increasing feature order.
  std::vector<GridAxis> weights;
  GridAxis intercept;
  // Minimize over the intercept exactly (every interval between sign
  // changes) instead of stepping through `intercept`.
  bool exact_intercept = false;

  static GridSpec uniform(double resolution, std::vector<std::pair<double, double>> weight_ranges,
                          std::pair<double, double> intercept_range);
  bool contains(const LinearSurrogate& g, const std::vector<std::size_t>& active) const;
};

struct GridResult {
  LinearSurrogate surrogate;
  double objective = 0.0;  // exact_objective at the returned point
  std::size_t evaluated = 0;
};

/// Exhaustive minimization of L + lambda1 * complexity + lambda2 * psi_hard
/// over the grid, on the active set forward selection picks for `nb`.
/// Throws usage_error for active sets larger than two features.
GridResult grid_search_oracle(const Neighborhood& nb, std::size_t max_features,
                              const FairObjectiveConfig& cfg, const GridSpec& spec);

}  // namespace fairlime::testing
