#include "fairlime/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fairlime/error.hpp"
#include "fairlime/seed.hpp"
#include "fairlime/surrogate.hpp"

namespace fairlime {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

constexpr std::size_t kOracleFeature = 2;

}  // namespace

std::vector<std::size_t> strided_points(std::size_t n_rows, std::size_t n_points) {
  if (n_points == 0 || n_points >= n_rows) {
    std::vector<std::size_t> all(n_rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  std::vector<std::size_t> idx(n_points);
  for (std::size_t i = 0; i < n_points; ++i) idx[i] = i * n_rows / n_points;
  return idx;
}

BoundaryReport run_boundary_experiment(const SyntheticConfig& cfg, const KernelConfig& kc,
                                       const std::vector<std::uint64_t>& seeds, Execution exec) {
  cfg.validate();
  kc.validate();
  if (seeds.size() < 5) throw usage_error("boundary experiment needs at least 5 seeds");

  BoundaryReport report;
  report.scenario = cfg;
  report.kernel = kc;
  report.seeds = seeds;
  report.majority_boundary = cfg.boundary_majority;
  report.minority_boundary = cfg.boundary_minority;
  report.midpoint = 0.5 * (cfg.boundary_majority + cfg.boundary_minority);

  const OracleModel oracle{3, 0, kOracleFeature, cfg.boundary_minority, cfg.boundary_majority};
  const BlackBoxModel model(oracle);
  constexpr std::size_t per_seed = 2 * kPanelSize;

  // Slot per (seed, group, panel point); NaN marks a degenerate surrogate.
  std::vector<double> boundaries(seeds.size() * per_seed);
  std::vector<double> group0_share(seeds.size());
  std::vector<TabularDataset> data(seeds.size());
  std::vector<FeatureStats> stats(seeds.size());
  std::vector<std::array<double, 2>> x0_mean(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SyntheticConfig c = cfg;
    c.seed = seeds[s];
    data[s] = generate_synthetic(c);
    stats[s] = feature_stats(data[s]);
    double sum[2] = {0.0, 0.0};
    std::size_t cnt[2] = {0, 0};
    for (std::size_t i = 0; i < data[s].n_rows(); ++i) {
      const int g = static_cast<int>(data[s].rows(i, 0));
      sum[g] += data[s].rows(i, 1);
      ++cnt[g];
    }
    if (cnt[0] == 0 || cnt[1] == 0)
      throw data_error("synthetic data for seed " + std::to_string(seeds[s]) +
                       " contains a single group");
    x0_mean[s] = {sum[0] / static_cast<double>(cnt[0]), sum[1] / static_cast<double>(cnt[1])};
    group0_share[s] = static_cast<double>(cnt[0]) / static_cast<double>(data[s].n_rows());
  }

  LimeConfig lime;
  lime.kernel = kc;
  lime.max_features = 3;
  lime.exec = Execution::serial;

  for_each_index(
      boundaries.size(),
      [&](std::size_t slot) {
        const std::size_t s = slot / per_seed;
        const std::size_t g = (slot % per_seed) / kPanelSize;
        const std::size_t i = slot % kPanelSize;
        const double x1 = kPanelLow + (kPanelHigh - kPanelLow) * static_cast<double>(i) /
                                          static_cast<double>(kPanelSize - 1);
        const std::vector<double> x = {static_cast<double>(g), x0_mean[s][g], x1};
        const Explanation e = lime_explain(model, x, stats[s], lime, derive_seed(seeds[s], {g, i}));
        boundaries[slot] = e.surrogate.weights[kOracleFeature] == 0.0
                               ? std::nan("")
                               : implied_boundary(e.surrogate, kOracleFeature, x);
      },
      exec);

  for (std::size_t s = 0; s < seeds.size(); ++s) {
    std::vector<double> panel[2];
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t i = 0; i < kPanelSize; ++i) {
        const double b = boundaries[s * per_seed + g * kPanelSize + i];
        ++report.explanations;
        if (std::isnan(b)) {
          ++report.degenerate_count;
          continue;
        }
        panel[g].push_back(b);
      }
    if (panel[0].empty() || panel[1].empty()) continue;
    const double m0 = mean_of(panel[0]);
    const double m1 = mean_of(panel[1]);
    report.used_seeds.push_back(seeds[s]);
    report.per_seed_group0.push_back(m0);
    report.per_seed_group1.push_back(m1);
    report.per_seed_boundary.push_back(group0_share[s] * m0 + (1.0 - group0_share[s]) * m1);
  }
  if (report.per_seed_boundary.empty())
    throw numeric_error("every seed produced only degenerate surrogates");
  report.mean_boundary = mean_of(report.per_seed_boundary);
  report.std_boundary = std_of(report.per_seed_boundary);
  report.mean_group0 = mean_of(report.per_seed_group0);
  report.mean_group1 = mean_of(report.per_seed_group1);
  report.closer_to_majority = std::abs(report.mean_boundary - report.majority_boundary) <
                              std::abs(report.mean_boundary - report.minority_boundary);
  return report;
}

SweepReport run_perturbation_sweep(const TabularDataset& ds, const BlackBoxModel& f,
                                   const std::vector<std::size_t>& counts,
                                   const FairObjectiveConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds,
                                   const SweepOptions& opts) {
  cfg.validate();
  if (counts.empty()) throw usage_error("sweep needs at least one perturbation count");
  if (seeds.empty()) throw usage_error("sweep needs at least one seed");
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 50) throw usage_error("perturbation counts must be >= 50");
    if (c > 0 && counts[c] <= counts[c - 1])
      throw usage_error("perturbation counts must be strictly ascending");
  }
  ds.validate();
  if (f.n_features() != ds.n_features())
    throw data_error("model expects " + std::to_string(f.n_features()) + " features, data has " +
                     std::to_string(ds.n_features()));

  const FeatureStats stats = feature_stats(ds);
  const std::vector<std::size_t> points = strided_points(ds.n_rows(), opts.n_points);
  const double width = opts.kernel_width > 0.0
                           ? opts.kernel_width
                           : KernelConfig::defaults(ds.n_features()).width;
  SamplingOptions sampling{ds.group_col, opts.freeze_group, Execution::serial};

  SweepReport report;
  report.counts = counts;
  report.seeds = seeds;
  report.lambda2 = cfg.lambda2;
  report.tau = cfg.tau;
  report.n_points = points.size();
  report.vanilla.resize(counts.size());
  report.fair.resize(counts.size());
  report.explained.assign(counts.size(), 0);
  report.skipped.assign(counts.size(), 0);

  struct Slot {
    bool skipped = false;
    double vanilla = 0.0;
    double fair = 0.0;
  };
  std::vector<Slot> slots(points.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const KernelConfig kc{width, counts[c]};
    for (std::uint64_t seed : seeds) {
      for_each_index(
          points.size(),
          [&](std::size_t p) {
            Slot& slot = slots[p];
            slot = Slot{};
            const Neighborhood nb =
                sample_neighborhood(ds.rows.row(points[p]), stats, f, kc,
                                    derive_seed(seed, {counts[c], points[p]}), sampling);
            if (!nb.has_both_groups()) {
              slot.skipped = true;
              return;
            }
            const Explanation vanilla = explain_neighborhood(nb, opts.max_features);
            slot.vanilla = *vanilla.objective.fairness;
            const Explanation fair = fit_fair(nb, opts.max_features, cfg);
            slot.fair = *fair.objective.fairness;
          },
          opts.exec);
      double sum_v = 0.0, sum_f = 0.0;
      std::size_t used = 0;
      for (const Slot& slot : slots) {
        if (slot.skipped) {
          ++report.skipped[c];
          continue;
        }
        sum_v += slot.vanilla;
        sum_f += slot.fair;
        ++used;
      }
      if (used == 0)
        throw data_error("every neighborhood at count " + std::to_string(counts[c]) +
                         " held a single group");
      report.explained[c] += used;
      report.vanilla[c].per_seed.push_back(sum_v / static_cast<double>(used));
      report.fair[c].per_seed.push_back(sum_f / static_cast<double>(used));
    }
    for (SweepCell* cell : {&report.vanilla[c], &report.fair[c]}) {
      cell->n_seeds = cell->per_seed.size();
      cell->mean_psi = mean_of(cell->per_seed);
      cell->std_psi = std_of(cell->per_seed);
    }
  }
  return report;
}

}  // namespace fairlime
