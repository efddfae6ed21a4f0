#include "fairlime/neighborhood.hpp"

#include <algorithm>
#include <random>

#include "fairlime/error.hpp"

namespace fairlime {

void KernelConfig::validate() const {
  if (!(width > 0.0)) throw usage_error("kernel width must be positive");
  if (n_samples < 10) throw usage_error("kernel n_samples must be >= 10");
}

std::size_t Neighborhood::group_count(int g) const {
  return static_cast<std::size_t>(std::count(groups.begin(), groups.end(), g));
}

std::vector<double> distance_scale(const FeatureStats& stats) {
  std::vector<double> s(stats.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::max(stats.stddev[j], kStdFloor);
  return s;
}

Neighborhood sample_neighborhood(std::span<const double> x, const FeatureStats& stats,
                                 const BlackBoxModel& model, const KernelConfig& kc,
                                 std::uint64_t seed, const SamplingOptions& opts) {
  kc.validate();
  const std::size_t d = x.size();
  if (stats.size() != d)
    throw data_error("sample_neighborhood: stats cover " + std::to_string(stats.size()) +
                     " features, instance has " + std::to_string(d));
  if (model.n_features() != d)
    throw data_error("sample_neighborhood: model expects " + std::to_string(model.n_features()) +
                     " features, instance has " + std::to_string(d));
  if (opts.group_col >= d) throw data_error("sample_neighborhood: group column out of range");

  Neighborhood nb;
  nb.center.assign(x.begin(), x.end());
  nb.scale = distance_scale(stats);
  nb.group_col = opts.group_col;
  nb.seed = seed;
  nb.samples = Matrix(kc.n_samples, d);

  // Sampling stays sequential so the stream is independent of thread count.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < kc.n_samples; ++i) {
    auto z = nb.samples.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (j == opts.group_col && opts.freeze_group) {
        z[j] = x[j];
      } else if (stats.kinds[j] == FeatureKind::binary) {
        z[j] = unit(rng) < stats.one_frequency[j] ? 1.0 : 0.0;
      } else {
        z[j] = x[j] + nb.scale[j] * normal(rng);
      }
    }
  }

  nb.weights.resize(kc.n_samples);
  kernel_weights(nb.samples, nb.center, nb.scale, kc.width, nb.weights, opts.exec);
  nb.f_scores.resize(kc.n_samples);
  score_rows(model, nb.samples, nb.f_scores, opts.exec);
  nb.f_preds.resize(kc.n_samples);
  nb.groups.resize(kc.n_samples);
  for (std::size_t i = 0; i < kc.n_samples; ++i) {
    nb.f_preds[i] = nb.f_scores[i] >= kDecisionThreshold ? 1 : 0;
    nb.groups[i] = static_cast<int>(nb.samples(i, opts.group_col));
  }
  return nb;
}

std::vector<double> flip_group(std::span<const double> x, std::size_t group_col) {
  if (group_col >= x.size()) throw data_error("flip_group: group column out of range");
  const double g = x[group_col];
  if (g != 0.0 && g != 1.0) throw data_error("flip_group: group value outside {0,1}");
  std::vector<double> out(x.begin(), x.end());
  out[group_col] = 1.0 - g;
  return out;
}

}  // namespace fairlime
