#include "fairlime/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fairlime/error.hpp"
#include "fairlime/metrics.hpp"

namespace fairlime {

namespace {

// Weighted, centered second moments of the neighborhood, with weights
// normalized to sum to one.
struct WeightedMoments {
  std::vector<double> feature_mean;
  double target_mean = 0.0;
  Eigen::MatrixXd gram;    // sum_i k_i (z_i - zbar)(z_i - zbar)^T
  Eigen::VectorXd cross;   // sum_i k_i (z_i - zbar)(y_i - ybar)
  double target_ss = 0.0;  // sum_i k_i (y_i - ybar)^2
};

WeightedMoments weighted_moments(const Neighborhood& nb) {
  const std::size_t n = nb.size();
  const std::size_t d = nb.n_features();
  if (n == 0) throw data_error("empty neighborhood");
  double total = 0.0;
  for (double k : nb.weights) total += k;
  if (!(total > 0.0) || !std::isfinite(total))
    throw numeric_error("neighborhood kernel weights sum to " + std::to_string(total));

  WeightedMoments m;
  m.feature_mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = nb.weights[i] / total;
    auto z = nb.samples.row(i);
    for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] += k * z[j];
    m.target_mean += k * nb.f_scores[i];
  }
  // A constant column is centered exactly; the weighted mean above can miss
  // the constant by an ulp and leak noise into the fit.
  for (std::size_t j = 0; j < d; ++j) {
    const double first = nb.samples(0, j);
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = nb.samples(i, j) == first;
    if (constant) m.feature_mean[j] = first;
  }
  if (std::all_of(nb.f_scores.begin(), nb.f_scores.end(),
                  [&](double y) { return y == nb.f_scores.front(); }))
    m.target_mean = nb.f_scores.front();
  m.gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m.cross = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXd u(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const double k = nb.weights[i] / total;
    auto z = nb.samples.row(i);
    for (std::size_t j = 0; j < d; ++j) u[static_cast<Eigen::Index>(j)] = z[j] - m.feature_mean[j];
    const double r = nb.f_scores[i] - m.target_mean;
    m.gram.noalias() += k * u * u.transpose();
    m.cross.noalias() += (k * r) * u;
    m.target_ss += k * r * r;
  }
  return m;
}

struct SubsetFit {
  Eigen::VectorXd beta;
  double sse = 0.0;
};

SubsetFit solve_subset(const WeightedMoments& m, const std::vector<std::size_t>& subset) {
  const auto s = static_cast<Eigen::Index>(subset.size());
  SubsetFit fit;
  if (s == 0) {
    fit.sse = m.target_ss;
    return fit;
  }
  Eigen::MatrixXd a(s, s);
  Eigen::VectorXd c(s);
  for (Eigen::Index p = 0; p < s; ++p) {
    c[p] = m.cross[static_cast<Eigen::Index>(subset[p])];
    for (Eigen::Index q = 0; q < s; ++q)
      a(p, q) = m.gram(static_cast<Eigen::Index>(subset[p]), static_cast<Eigen::Index>(subset[q]));
  }
  Eigen::MatrixXd damped = a;
  damped.diagonal().array() += kRidgeDamping;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw numeric_error("weighted least squares: normal equations not positive definite");
  fit.beta = ldlt.solve(c);
  if (!fit.beta.allFinite())
    throw numeric_error("weighted least squares: rank deficient beyond ridge rescue");
  fit.sse = m.target_ss - 2.0 * fit.beta.dot(c) + fit.beta.dot(a * fit.beta);
  return fit;
}

LinearSurrogate assemble(const WeightedMoments& m, const std::vector<std::size_t>& subset,
                         const SubsetFit& fit, std::size_t d) {
  LinearSurrogate g;
  g.weights.assign(d, 0.0);
  g.intercept = m.target_mean;
  for (std::size_t p = 0; p < subset.size(); ++p) {
    const double w = fit.beta[static_cast<Eigen::Index>(p)];
    g.weights[subset[p]] = w;
    g.intercept -= w * m.feature_mean[subset[p]];
  }
  for (std::size_t j : subset)
    if (g.weights[j] != 0.0) g.active_set.push_back(j);
  std::sort(g.active_set.begin(), g.active_set.end());
  return g;
}

}  // namespace

double surrogate_score(const LinearSurrogate& g, std::span<const double> z) {
  if (z.size() != g.weights.size())
    throw data_error("surrogate expects " + std::to_string(g.weights.size()) +
                     " features, got " + std::to_string(z.size()));
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += g.weights[j] * z[j];
  return s + g.intercept;
}

int surrogate_predict(const LinearSurrogate& g, std::span<const double> z) {
  return surrogate_score(g, z) >= kDecisionThreshold ? 1 : 0;
}

double fidelity_loss(const LinearSurrogate& g, const Neighborhood& nb) {
  if (nb.size() == 0) throw data_error("fidelity_loss: empty neighborhood");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const double r = nb.f_scores[i] - surrogate_score(g, nb.samples.row(i));
    num += nb.weights[i] * r * r;
    den += nb.weights[i];
  }
  return num / den;
}

double complexity(const LinearSurrogate& g) {
  return static_cast<double>(std::count_if(g.weights.begin(), g.weights.end(),
                                           [](double w) { return w != 0.0; }));
}

double implied_boundary(const LinearSurrogate& g, std::size_t feature,
                        std::span<const double> center) {
  if (feature >= g.weights.size()) throw data_error("implied_boundary: feature out of range");
  if (center.size() != g.weights.size())
    throw data_error("implied_boundary: center dimension mismatch");
  const double w = g.weights[feature];
  if (w == 0.0)
    throw data_error("implied_boundary: surrogate weight on feature " + std::to_string(feature) +
                     " is zero");
  double rest = g.intercept;
  for (std::size_t j = 0; j < center.size(); ++j)
    if (j != feature) rest += g.weights[j] * center[j];
  return (kDecisionThreshold - rest) / w;
}

LinearSurrogate fit_weighted_least_squares(const Neighborhood& nb,
                                           const std::vector<std::size_t>& active) {
  WeightedMoments m = weighted_moments(nb);
  return assemble(m, active, solve_subset(m, active), nb.n_features());
}

LinearSurrogate fit_lime(const Neighborhood& nb, std::size_t max_features) {
  if (max_features == 0) throw usage_error("sparsity budget K must be >= 1");
  const std::size_t d = nb.n_features();
  WeightedMoments m = weighted_moments(nb);
  const std::size_t budget = std::min(max_features, d);

  std::vector<std::size_t> selected;
  std::vector<bool> used(d, false);
  SubsetFit current = solve_subset(m, selected);
  while (selected.size() < budget) {
    std::size_t best_j = d;
    SubsetFit best;
    best.sse = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (used[j]) continue;
      auto trial = selected;
      trial.push_back(j);
      SubsetFit fit = solve_subset(m, trial);
      if (fit.sse < best.sse) {
        best = std::move(fit);
        best_j = j;
      }
    }
    if (best_j == d) break;
    selected.push_back(best_j);
    used[best_j] = true;
    current = std::move(best);
  }
  return assemble(m, selected, current, d);
}

Explanation explain_neighborhood(const Neighborhood& nb, std::size_t max_features) {
  Explanation e;
  e.surrogate = fit_lime(nb, max_features);
  e.center = nb.center;
  e.n_perturbations = nb.size();
  e.seed = nb.seed;
  e.objective.fidelity = fidelity_loss(e.surrogate, nb);
  e.objective.complexity = complexity(e.surrogate);
  if (nb.has_both_groups()) {
    std::vector<int> e_preds(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i)
      e_preds[i] = surrogate_predict(e.surrogate, nb.samples.row(i));
    e.objective.fairness = std::abs(demographic_parity(nb.f_preds, nb.groups) -
                                    demographic_parity(e_preds, nb.groups));
  }
  return e;
}

Explanation lime_explain(const BlackBoxModel& f, std::span<const double> x,
                         const FeatureStats& stats, const LimeConfig& cfg, std::uint64_t seed) {
  Neighborhood nb = sample_neighborhood(x, stats, f, cfg.kernel, seed, cfg.sampling());
  return explain_neighborhood(nb, cfg.max_features);
}

}  // namespace fairlime
