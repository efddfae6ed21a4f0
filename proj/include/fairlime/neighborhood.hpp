#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/dataset.hpp"
#include "fairlime/matrix.hpp"
#include "fairlime/parallel.hpp"

namespace fairlime {

// Continuous features whose training std is below this are perturbed (and
// standardized) with this scale instead.
inline constexpr double kStdFloor = 1e-6;

struct KernelConfig {
  double width = 1.0;
  std::size_t n_samples = 5000;

  /// width = 0.75 * sqrt(n_features).
  static KernelConfig defaults(std::size_t n_features, std::size_t n_samples = 5000) {
    return {0.75 * std::sqrt(static_cast<double>(n_features)), n_samples};
  }
  void validate() const;
  friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct SamplingOptions {
  std::size_t group_col = 0;
  // Keep the sensitive attribute at the instance's value instead of
  // resampling it from its marginal.
  bool freeze_group = false;
  Execution exec = Execution::parallel;
};

/// Perturbation samples around one instance, with kernel weights and the
/// black-box outputs on every sample.
struct Neighborhood {
  std::vector<double> center;
  Matrix samples;
  std::vector<double> weights;
  std::vector<double> f_scores;
  std::vector<int> f_preds;
  std::vector<int> groups;
  // Per-feature standardization used by the distance.
  std::vector<double> scale;
  std::size_t group_col = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.rows(); }
  std::size_t n_features() const noexcept { return center.size(); }
  std::size_t group_count(int g) const;
  bool has_both_groups() const { return group_count(0) > 0 && group_count(1) > 0; }
};

/// Continuous features: x_j + N(0, std_j^2). Binary features (the group
/// included unless frozen): Bernoulli(training frequency of 1). Weight of a
/// sample: exp(-d^2 / width^2), d the Euclidean distance after dividing each
/// coordinate by its training std.
Neighborhood sample_neighborhood(std::span<const double> x, const FeatureStats& stats,
                                 const BlackBoxModel& model, const KernelConfig& kc,
                                 std::uint64_t seed, const SamplingOptions& opts = {});

/// Copy of x with the group bit inverted.
std::vector<double> flip_group(std::span<const double> x, std::size_t group_col);

/// Per-feature distance scale: training std, floored at kStdFloor.
std::vector<double> distance_scale(const FeatureStats& stats);

}  // namespace fairlime
