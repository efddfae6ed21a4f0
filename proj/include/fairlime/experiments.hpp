#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/dataset.hpp"
#include "fairlime/fair_objective.hpp"
#include "fairlime/neighborhood.hpp"
#include "fairlime/parallel.hpp"

namespace fairlime {

// Panel of explained points: this many x1 values evenly spaced over
// [kPanelLow, kPanelHigh], for each group, with x0 at the group mean.
inline constexpr std::size_t kPanelSize = 9;
inline constexpr double kPanelLow = 4.5;
inline constexpr double kPanelHigh = 6.5;

struct BoundaryReport {
  SyntheticConfig scenario;
  KernelConfig kernel;
  std::vector<std::uint64_t> seeds;
  // One entry per seed that produced a usable boundary, aligned with
  // `used_seeds`. Each is the group-share-weighted mean of the panel
  // boundaries for that seed.
  std::vector<std::uint64_t> used_seeds;
  std::vector<double> per_seed_boundary;
  std::vector<double> per_seed_group0;
  std::vector<double> per_seed_group1;
  double mean_boundary = 0.0;
  double std_boundary = 0.0;
  double mean_group0 = 0.0;
  double mean_group1 = 0.0;
  double majority_boundary = 5.0;
  double minority_boundary = 6.0;
  double midpoint = 5.5;
  bool closer_to_majority = false;
  // Explanations whose x1 weight was exactly zero. They are excluded from
  // the means.
  std::size_t degenerate_count = 0;
  std::size_t explanations = 0;

  friend bool operator==(const BoundaryReport&, const BoundaryReport&) = default;
};

BoundaryReport run_boundary_experiment(const SyntheticConfig& cfg, const KernelConfig& kc,
                                       const std::vector<std::uint64_t>& seeds,
                                       Execution exec = Execution::parallel);

struct SweepOptions {
  // Points explained per (count, seed): rows i * n / n_points. 0 means all.
  std::size_t n_points = 200;
  std::size_t max_features = 5;
  // Kernel width; <= 0 selects the default for the feature count.
  double kernel_width = 0.0;
  bool freeze_group = false;
  Execution exec = Execution::parallel;
};

struct SweepCell {
  double mean_psi = 0.0;
  double std_psi = 0.0;  // across seeds (n - 1 denominator; 0 for one seed)
  std::vector<double> per_seed;
  std::size_t n_seeds = 0;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepReport {
  std::vector<std::size_t> counts;
  std::vector<std::uint64_t> seeds;
  double lambda2 = 0.0;
  double tau = 0.0;
  std::size_t n_points = 0;
  // Indexed by count position.
  std::vector<SweepCell> vanilla;
  std::vector<SweepCell> fair;
  // Explanations entering each (count, seed) mean, summed over seeds.
  std::vector<std::size_t> explained;
  // Single-group neighborhoods skipped by both variants, summed over seeds.
  std::vector<std::size_t> skipped;

  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// Hard psi of vanilla (lambda2 = 0) and fair (cfg.lambda2) explanations on
/// identical neighborhoods for every (point, count, seed).
SweepReport run_perturbation_sweep(const TabularDataset& ds, const BlackBoxModel& f,
                                   const std::vector<std::size_t>& counts,
                                   const FairObjectiveConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds,
                                   const SweepOptions& opts = {});

/// Row indices i * n / n_points for i in [0, n_points).
std::vector<std::size_t> strided_points(std::size_t n_rows, std::size_t n_points);

}  // namespace fairlime
