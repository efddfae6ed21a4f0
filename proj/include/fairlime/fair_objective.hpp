#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/neighborhood.hpp"
#include "fairlime/surrogate.hpp"

namespace fairlime {

// Temperature annealing for the relaxed penalty starts here and halves until
// it reaches the configured tau.
inline constexpr double kAnnealStart = 0.05;
inline constexpr double kAnnealFactor = 0.5;

struct FairObjectiveConfig {
  double lambda1 = 0.0;
  double lambda2 = 5.0;
  // Sigmoid temperature of the relaxed surrogate predictions (score scale).
  double tau = 0.05;
  // Gradient iterations per annealing stage.
  std::size_t steps = 200;
  // Initial step of the backtracking line search.
  double step_size = 1.0;
  // Restart 0 starts at the vanilla solution, the others at Gaussian
  // perturbations of it (std `restart_noise` in standardized coordinates).
  std::size_t restarts = 4;
  double restart_noise = 0.1;
  // Exact line-search polish of the unrelaxed objective after descent.
  bool polish = true;
  std::size_t max_resample = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<double> temperature_schedule(double tau);

struct PsiBreakdown {
  double dp_blackbox = 0.0;
  double dp_surrogate_hard = 0.0;
  double dp_surrogate_smooth = 0.0;
  double psi_hard = 0.0;
  double psi_smooth = 0.0;
};

/// Demographic-parity mismatch between the black-box predictions and the
/// surrogate on the neighborhood samples. Hard mode thresholds surrogate
/// scores at 0.5; smooth mode averages sigmoid((score - 0.5) / tau). Both are
/// always computed. Throws MetricUndefined for a single-group neighborhood.
PsiBreakdown psi(std::span<const int> f_preds, const LinearSurrogate& g, const Neighborhood& nb,
                 double tau);

/// L + lambda1 * complexity + lambda2 * psi_smooth (at cfg.tau).
double smoothed_objective(const LinearSurrogate& g, const Neighborhood& nb,
                          std::span<const int> f_preds, const FairObjectiveConfig& cfg);

/// L + lambda1 * complexity + lambda2 * psi_hard.
double exact_objective(const LinearSurrogate& g, const Neighborhood& nb,
                       const FairObjectiveConfig& cfg);

struct SurrogateGradient {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Gradient of L + lambda2 * psi_smooth over every weight and the intercept.
/// |.| in psi contributes sign(dp_blackbox - dp_surrogate_smooth), with
/// sign(0) = 0.
SurrogateGradient smoothed_objective_gradient(const LinearSurrogate& g, const Neighborhood& nb,
                                              std::span<const int> f_preds,
                                              const FairObjectiveConfig& cfg);

/// Fairness-penalized surrogate on the active set chosen by forward
/// selection. lambda2 == 0 returns the vanilla fit unchanged.
Explanation fit_fair(const Neighborhood& nb, std::size_t max_features,
                     const FairObjectiveConfig& cfg);

/// Samples a neighborhood (resampling up to cfg.max_resample times until both
/// groups are present) and fits the penalized surrogate.
Explanation fair_lime_explain(const BlackBoxModel& f, std::span<const double> x,
                              const FeatureStats& stats, const LimeConfig& lime,
                              const FairObjectiveConfig& cfg, std::uint64_t seed);

}  // namespace fairlime
