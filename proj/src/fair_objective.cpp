#include "fairlime/fair_objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fairlime/error.hpp"
#include "fairlime/metrics.hpp"
#include "fairlime/seed.hpp"

namespace fairlime {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::vector<double> surrogate_scores(const LinearSurrogate& g, const Neighborhood& nb) {
  std::vector<double> s(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) s[i] = surrogate_score(g, nb.samples.row(i));
  return s;
}

// L + lambda2 * psi_smooth as a function of the per-sample surrogate scores,
// with its derivative with respect to each score.
class SmoothObjective {
 public:
  SmoothObjective(const Neighborhood& nb, std::span<const int> f_preds, double lambda2)
      : nb_(nb), f_preds_(f_preds), lambda2_(lambda2) {
    if (f_preds.size() != nb.size()) throw data_error("f_preds length does not match neighborhood");
    double total = 0.0;
    for (double k : nb.weights) total += k;
    norm_weights_.resize(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i) norm_weights_[i] = nb.weights[i] / total;
    n_[0] = nb.group_count(0);
    n_[1] = nb.group_count(1);
    if (n_[0] == 0 || n_[1] == 0)
      throw MetricUndefined("fairness penalty needs both groups in the neighborhood", n_[0], n_[1]);
    dp_f_ = demographic_parity(f_preds, nb.groups);
  }

  double dp_blackbox() const { return dp_f_; }

  double evaluate(std::span<const double> scores, double tau, std::vector<double>* d_score) const {
    const std::size_t n = scores.size();
    q_.resize(n);
    double loss = 0.0;
    double q_sum[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double r = nb_.f_scores[i] - scores[i];
      loss += norm_weights_[i] * r * r;
      q_[i] = sigmoid((scores[i] - kDecisionThreshold) / tau);
      q_sum[nb_.groups[i]] += q_[i];
    }
    const double dp_q = q_sum[1] / static_cast<double>(n_[1]) - q_sum[0] / static_cast<double>(n_[0]);
    const double gap = dp_f_ - dp_q;
    if (d_score) {
      d_score->resize(n);
      const double s = lambda2_ * sign(gap);
      const double step[2] = {-s * (-1.0 / static_cast<double>(n_[0])) / tau,
                              -s * (1.0 / static_cast<double>(n_[1])) / tau};
      for (std::size_t i = 0; i < n; ++i) {
        const double r = nb_.f_scores[i] - scores[i];
        (*d_score)[i] = -2.0 * norm_weights_[i] * r + step[nb_.groups[i]] * q_[i] * (1.0 - q_[i]);
      }
    }
    return loss + lambda2_ * std::abs(gap);
  }

  // Exact objective (without the constant complexity term).
  double evaluate_hard(std::span<const double> scores) const {
    double loss = 0.0;
    std::size_t pos[2] = {0, 0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double r = nb_.f_scores[i] - scores[i];
      loss += norm_weights_[i] * r * r;
      pos[nb_.groups[i]] += scores[i] >= kDecisionThreshold;
    }
    return loss + lambda2_ * std::abs(dp_f_ - dp_from_counts(pos[0], pos[1]));
  }

  double dp_from_counts(std::size_t pos0, std::size_t pos1) const {
    return static_cast<double>(pos1) / static_cast<double>(n_[1]) -
           static_cast<double>(pos0) / static_cast<double>(n_[0]);
  }

  const std::vector<double>& norm_weights() const { return norm_weights_; }
  std::size_t group_size(int g) const { return n_[g]; }
  double lambda2() const { return lambda2_; }

 private:
  const Neighborhood& nb_;
  std::span<const int> f_preds_;
  double lambda2_;
  std::vector<double> norm_weights_;
  std::size_t n_[2] = {0, 0};
  double dp_f_ = 0.0;
  mutable std::vector<double> q_;
};

// A point strictly inside the open interval (lo, hi), as close as possible
// to `target`. Either end may be infinite.
double inside(double target, double lo, double hi) {
  if (target > lo && target < hi) return target;
  const bool toward_lo = target <= lo;
  const double edge = toward_lo ? lo : hi;
  double margin = 1e-9 * std::max(1.0, std::abs(edge));
  if (std::isfinite(lo) && std::isfinite(hi)) margin = std::min(margin, 0.5 * (hi - lo));
  return toward_lo ? lo + margin : hi - margin;
}

struct Crossing {
  double t;
  int group;
  int delta;  // +1: becomes positive past t, -1: becomes negative past t
};

// Optimizer state in standardized coordinates over the active set:
// score_i = intercept + sum_j coef_j * u_ij, with u_ij = (z_ij - center_j) / scale_j.
class ActiveSetProblem {
 public:
  ActiveSetProblem(const Neighborhood& nb, std::vector<std::size_t> active, const SmoothObjective& obj)
      : nb_(nb), active_(std::move(active)), obj_(obj) {
    const std::size_t n = nb.size();
    const std::size_t a = active_.size();
    u_.resize(n * a);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < a; ++p) {
        const std::size_t j = active_[p];
        u_[i * a + p] = (nb.samples(i, j) - nb.center[j]) / nb.scale[j];
      }
    for (std::size_t p = 0; p < a; ++p)
      if (active_[p] == nb.group_col) group_slot_ = p;
  }

  std::size_t dim() const { return active_.size() + 1; }  // coefficients + intercept

  std::vector<double> from_surrogate(const LinearSurrogate& g) const {
    std::vector<double> theta(dim(), 0.0);
    double intercept = g.intercept;
    for (std::size_t p = 0; p < active_.size(); ++p) {
      const std::size_t j = active_[p];
      theta[p] = g.weights[j] * nb_.scale[j];
      intercept += g.weights[j] * nb_.center[j];
    }
    theta.back() = intercept;
    return theta;
  }

  LinearSurrogate to_surrogate(std::span<const double> theta) const {
    LinearSurrogate g;
    g.weights.assign(nb_.n_features(), 0.0);
    g.intercept = theta.back();
    for (std::size_t p = 0; p < active_.size(); ++p) {
      const std::size_t j = active_[p];
      g.weights[j] = theta[p] / nb_.scale[j];
      g.intercept -= g.weights[j] * nb_.center[j];
    }
    for (std::size_t j : active_)
      if (g.weights[j] != 0.0) g.active_set.push_back(j);
    std::sort(g.active_set.begin(), g.active_set.end());
    return g;
  }

  void scores(std::span<const double> theta, std::vector<double>& out) const {
    const std::size_t n = nb_.size();
    const std::size_t a = active_.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = theta.back();
      const double* u = u_.data() + i * a;
      for (std::size_t p = 0; p < a; ++p) s += theta[p] * u[p];
      out[i] = s;
    }
  }

  // Score change per unit step along `dir`.
  void direction_rates(std::span<const double> dir, std::vector<double>& out) const {
    const std::size_t n = nb_.size();
    const std::size_t a = active_.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = dir.back();
      const double* u = u_.data() + i * a;
      for (std::size_t p = 0; p < a; ++p) s += dir[p] * u[p];
      out[i] = s;
    }
  }

  double smooth_value(std::span<const double> theta, double tau, std::vector<double>* grad) {
    scores(theta, scratch_scores_);
    const double v = obj_.evaluate(scratch_scores_, tau, grad ? &scratch_d_ : nullptr);
    if (grad) {
      const std::size_t n = nb_.size();
      const std::size_t a = active_.size();
      grad->assign(dim(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = scratch_d_[i];
        const double* u = u_.data() + i * a;
        for (std::size_t p = 0; p < a; ++p) (*grad)[p] += d * u[p];
        grad->back() += d;
      }
    }
    return v;
  }

  double hard_value(std::span<const double> theta) {
    scores(theta, scratch_scores_);
    return obj_.evaluate_hard(scratch_scores_);
  }

  // Exact minimization of the unrelaxed objective along theta + t * dir.
  // Returns true and updates theta when the objective strictly improves.
  bool line_polish(std::vector<double>& theta, std::span<const double> dir, double& current) {
    scores(theta, scratch_scores_);
    direction_rates(dir, scratch_rates_);
    const auto& s = scratch_scores_;
    const auto& rate = scratch_rates_;
    const auto& k = obj_.norm_weights();
    const std::size_t n = nb_.size();

    // L(t) = qa t^2 + qb t + qc
    double qa = 0.0, qb = 0.0, qc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = nb_.f_scores[i] - s[i];
      qa += k[i] * rate[i] * rate[i];
      qb += -2.0 * k[i] * r * rate[i];
      qc += k[i] * r * r;
    }
    if (!(qa > 0.0)) return false;
    // The penalty is nonnegative, so only steps where L alone stays below the
    // current objective can improve it.
    const double budget = current - qc + 1e-12 * (1.0 + std::abs(current));
    const double disc = qb * qb + 4.0 * qa * budget;
    if (!(disc >= 0.0)) return false;
    const double root = std::sqrt(disc);
    const double t_lo = (-qb - root) / (2.0 * qa);
    const double t_hi = (-qb + root) / (2.0 * qa);

    std::size_t pos[2] = {0, 0};
    auto& crossings = scratch_crossings_;
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const int g = nb_.groups[i];
      if (rate[i] == 0.0) {
        pos[g] += s[i] >= kDecisionThreshold;
        continue;
      }
      const double t = (kDecisionThreshold - s[i]) / rate[i];
      // Sign on the open interval just above t_lo.
      const bool positive_at_lo = rate[i] > 0.0 ? t <= t_lo : t > t_lo;
      pos[g] += positive_at_lo;
      if (t > t_lo && t < t_hi) crossings.push_back({t, g, rate[i] > 0.0 ? +1 : -1});
    }
    std::sort(crossings.begin(), crossings.end(),
              [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
    const double vertex = -qb / (2.0 * qa);
    const double penalty = obj_.lambda2();
    const double dp_f = obj_.dp_blackbox();

    double best_model = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    double lo = t_lo;
    std::size_t c = 0;
    while (true) {
      const double hi = c < crossings.size() ? crossings[c].t : t_hi;
      if (hi > lo) {
        const double t = inside(vertex, lo, hi);
        const double model = qa * t * t + qb * t +
                             penalty * std::abs(dp_f - obj_.dp_from_counts(pos[0], pos[1]));
        if (model < best_model) {
          best_model = model;
          best_t = t;
        }
      }
      if (c >= crossings.size()) break;
      // Apply every crossing at this breakpoint.
      const double t_here = crossings[c].t;
      while (c < crossings.size() && crossings[c].t == t_here) {
        if (crossings[c].delta > 0) ++pos[crossings[c].group];
        else --pos[crossings[c].group];
        ++c;
      }
      lo = t_here;
    }
    if (!std::isfinite(best_t) || best_t == 0.0) return false;
    std::vector<double> trial = theta;
    for (std::size_t p = 0; p < trial.size(); ++p) trial[p] += best_t * dir[p];
    const double v = hard_value(trial);
    if (v < current) {
      theta = std::move(trial);
      current = v;
      return true;
    }
    return false;
  }

  // Exact joint minimization over the intercept and the group coefficient.
  // The pair maps one-to-one onto a separate score offset per group, so each
  // group's positive count can be chosen independently.
  bool group_block_polish(std::vector<double>& theta, double& current) {
    if (!group_slot_) return false;
    const std::size_t slot = *group_slot_;
    const std::size_t gcol = nb_.group_col;
    const double u0 = (0.0 - nb_.center[gcol]) / nb_.scale[gcol];
    const double u1 = (1.0 - nb_.center[gcol]) / nb_.scale[gcol];

    std::vector<double> base_theta = theta;
    base_theta[slot] = 0.0;
    base_theta.back() = 0.0;
    scores(base_theta, scratch_scores_);
    const auto& base = scratch_scores_;
    const auto& k = obj_.norm_weights();
    const double inf = std::numeric_limits<double>::infinity();

    // Per-group loss as a quadratic in that group's offset.
    double qa[2] = {0.0, 0.0}, qb[2] = {0.0, 0.0}, qc[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < nb_.size(); ++i) {
      const int g = nb_.groups[i];
      const double r = nb_.f_scores[i] - base[i];
      qa[g] += k[i];
      qb[g] += -2.0 * k[i] * r;
      qc[g] += k[i] * r * r;
    }
    if (!(qa[0] > 0.0) || !(qa[1] > 0.0)) return false;
    const double floor_loss[2] = {qc[0] - qb[0] * qb[0] / (4.0 * qa[0]),
                                  qc[1] - qb[1] * qb[1] / (4.0 * qa[1])};
    const double limit = current + 1e-12 * (1.0 + std::abs(current));

    struct OffsetTable {
      std::vector<double> loss;    // best partial loss for c positives
      std::vector<double> offset;  // offset achieving it
    };
    auto build = [&](int group) {
      const std::size_t m = obj_.group_size(group);
      OffsetTable table;
      table.loss.assign(m + 1, inf);
      table.offset.assign(m + 1, 0.0);
      // Offsets worth considering: this group's loss plus the other group's
      // smallest possible loss must stay below the current objective.
      const double budget = limit - floor_loss[1 - group] - qc[group];
      const double disc = qb[group] * qb[group] + 4.0 * qa[group] * budget;
      if (!(disc >= 0.0)) return table;
      const double root = std::sqrt(disc);
      const double o_lo = (-qb[group] - root) / (2.0 * qa[group]);
      const double o_hi = (-qb[group] + root) / (2.0 * qa[group]);

      // Sample i is positive iff offset >= 0.5 - base[i].
      std::size_t fixed_pos = 0;
      double next_threshold = inf;  // smallest threshold above o_hi
      auto& mid = scratch_index_;
      mid.clear();
      for (std::size_t i = 0; i < nb_.size(); ++i) {
        if (nb_.groups[i] != group) continue;
        const double th = kDecisionThreshold - base[i];
        if (th <= o_lo) ++fixed_pos;
        else if (th <= o_hi) mid.push_back(i);
        else next_threshold = std::min(next_threshold, th);
      }
      std::sort(mid.begin(), mid.end(), [&](std::size_t a, std::size_t b) {
        return base[a] > base[b] || (base[a] == base[b] && a < b);
      });
      const double vertex = -qb[group] / (2.0 * qa[group]);
      for (std::size_t j = 0; j <= mid.size(); ++j) {
        // Offsets in [lo, hi) give exactly fixed_pos + j positives.
        const double lo = j == 0 ? o_lo : kDecisionThreshold - base[mid[j - 1]];
        const double hi = j == mid.size() ? next_threshold : kDecisionThreshold - base[mid[j]];
        if (!(lo < hi)) continue;
        const double o = vertex < lo ? lo : inside(vertex, lo, hi);
        const std::size_t cnt = fixed_pos + j;
        table.loss[cnt] = qa[group] * o * o + qb[group] * o + qc[group];
        table.offset[cnt] = o;
      }
      return table;
    };
    OffsetTable t0 = build(0);
    OffsetTable t1 = build(1);

    const double n0 = static_cast<double>(obj_.group_size(0));
    const double n1 = static_cast<double>(obj_.group_size(1));
    const double dp_f = obj_.dp_blackbox();
    const double penalty = obj_.lambda2();
    double min1 = std::numeric_limits<double>::infinity();
    for (double l : t1.loss) min1 = std::min(min1, l);
    std::vector<std::size_t> order0;
    for (std::size_t c0 = 0; c0 < t0.loss.size(); ++c0)
      if (std::isfinite(t0.loss[c0])) order0.push_back(c0);
    std::sort(order0.begin(), order0.end(), [&](std::size_t a, std::size_t b) {
      return t0.loss[a] < t0.loss[b] || (t0.loss[a] == t0.loss[b] && a < b);
    });

    // Only pairs beating the current point matter. For a given c0 that
    // confines c1 to a window around the count matching the black-box gap.
    double best = limit;
    bool found = false;
    std::size_t best0 = 0, best1 = 0;
    const auto last1 = static_cast<double>(t1.loss.size() - 1);
    for (std::size_t c0 : order0) {
      const double slack = best - t0.loss[c0] - min1;
      if (!(slack >= 0.0)) break;
      const double target = dp_f + static_cast<double>(c0) / n0;
      double lo = 0.0, hi = last1;
      if (penalty > 0.0) {
        const double radius = slack / penalty;
        lo = std::max(0.0, std::floor((target - radius) * n1) - 1.0);
        hi = std::min(last1, std::ceil((target + radius) * n1) + 1.0);
      }
      for (double c = lo; c <= hi; c += 1.0) {
        const auto c1 = static_cast<std::size_t>(c);
        const double v = t0.loss[c0] + t1.loss[c1] +
                         penalty * std::abs(target - static_cast<double>(c1) / n1);
        if (v < best) {
          best = v;
          best0 = c0;
          best1 = c1;
          found = true;
        }
      }
    }
    if (!found) return false;
    const double o0 = t0.offset[best0];
    const double o1 = t1.offset[best1];
    std::vector<double> trial = theta;
    trial[slot] = (o1 - o0) / (u1 - u0);
    trial.back() = o0 - trial[slot] * u0;
    const double v = hard_value(trial);
    if (v < current) {
      theta = std::move(trial);
      current = v;
      return true;
    }
    return false;
  }

  void polish(std::vector<double>& theta) {
    double current = hard_value(theta);
    std::vector<double> dir(dim(), 0.0);
    for (int round = 0; round < 50; ++round) {
      bool improved = group_block_polish(theta, current);
      for (std::size_t p = 0; p < dim(); ++p) {
        std::fill(dir.begin(), dir.end(), 0.0);
        dir[p] = 1.0;
        improved |= line_polish(theta, dir, current);
      }
      if (!improved) break;
    }
  }

 private:
  const Neighborhood& nb_;
  std::vector<std::size_t> active_;
  const SmoothObjective& obj_;
  std::vector<double> u_;
  std::optional<std::size_t> group_slot_;
  std::vector<double> scratch_scores_;
  std::vector<double> scratch_rates_;
  std::vector<double> scratch_d_;
  std::vector<Crossing> scratch_crossings_;
  std::vector<std::size_t> scratch_index_;
};

// Backtracking gradient descent on the relaxed objective at one temperature.
void descend(ActiveSetProblem& problem, std::vector<double>& theta, double tau,
             const FairObjectiveConfig& cfg, std::size_t restart) {
  std::vector<double> grad, trial_grad, trial(theta.size());
  double value = problem.smooth_value(theta, tau, &grad);
  if (!std::isfinite(value))
    throw numeric_error("fair objective is not finite at the start of restart " +
                        std::to_string(restart));
  double step = cfg.step_size;
  for (std::size_t it = 0; it < cfg.steps; ++it) {
    double gnorm2 = 0.0;
    for (double g : grad) gnorm2 += g * g;
    if (gnorm2 == 0.0) return;
    double trial_value = 0.0;
    while (true) {
      for (std::size_t p = 0; p < theta.size(); ++p) trial[p] = theta[p] - step * grad[p];
      trial_value = problem.smooth_value(trial, tau, &trial_grad);
      if (!std::isfinite(trial_value))
        throw numeric_error("fair objective diverged (non-finite) in restart " +
                            std::to_string(restart));
      if (trial_value <= value - 1e-4 * step * gnorm2) break;
      step *= 0.5;
      if (step < 1e-14) return;
    }
    const bool converged = value - trial_value <= 1e-13 * (1.0 + std::abs(value));
    theta.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    if (converged) return;
    step *= 2.0;
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Candidate {
  LinearSurrogate surrogate;
  double exact = 0.0;
  double smooth = 0.0;
};

// Lowest exact objective, then lowest smooth objective, then smallest weight
// max-norm, then lexicographic (weights, intercept).
bool better(const Candidate& a, const Candidate& b) {
  if (a.exact != b.exact) return a.exact < b.exact;
  if (a.smooth != b.smooth) return a.smooth < b.smooth;
  const double na = max_abs(a.surrogate.weights), nb = max_abs(b.surrogate.weights);
  if (na != nb) return na < nb;
  if (a.surrogate.weights != b.surrogate.weights) return a.surrogate.weights < b.surrogate.weights;
  return a.surrogate.intercept < b.surrogate.intercept;
}

}  // namespace

void FairObjectiveConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw usage_error("lambda1 and lambda2 must be >= 0");
  if (!(tau > 0.0)) throw usage_error("tau must be > 0");
  if (steps == 0) throw usage_error("optimizer steps must be positive");
  if (!(step_size > 0.0)) throw usage_error("step size must be positive");
  if (restarts == 0) throw usage_error("restarts must be positive");
  if (!(restart_noise >= 0.0)) throw usage_error("restart noise must be >= 0");
}

std::vector<double> temperature_schedule(double tau) {
  std::vector<double> stages;
  for (double t = kAnnealStart; t > tau * (1.0 + 1e-12); t *= kAnnealFactor) stages.push_back(t);
  stages.push_back(tau);
  return stages;
}

PsiBreakdown psi(std::span<const int> f_preds, const LinearSurrogate& g, const Neighborhood& nb,
                 double tau) {
  if (!(tau > 0.0)) throw usage_error("tau must be > 0");
  if (f_preds.size() != nb.size()) throw data_error("psi: f_preds length does not match neighborhood");
  const std::size_t n0 = nb.group_count(0), n1 = nb.group_count(1);
  if (n0 == 0 || n1 == 0)
    throw MetricUndefined("fairness penalty needs both groups in the neighborhood", n0, n1);
  PsiBreakdown b;
  b.dp_blackbox = demographic_parity(f_preds, nb.groups);
  std::size_t pos[2] = {0, 0};
  double q[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const double s = surrogate_score(g, nb.samples.row(i));
    pos[nb.groups[i]] += s >= kDecisionThreshold;
    q[nb.groups[i]] += sigmoid((s - kDecisionThreshold) / tau);
  }
  const double d0 = static_cast<double>(n0), d1 = static_cast<double>(n1);
  b.dp_surrogate_hard = static_cast<double>(pos[1]) / d1 - static_cast<double>(pos[0]) / d0;
  b.dp_surrogate_smooth = q[1] / d1 - q[0] / d0;
  b.psi_hard = std::abs(b.dp_blackbox - b.dp_surrogate_hard);
  b.psi_smooth = std::abs(b.dp_blackbox - b.dp_surrogate_smooth);
  return b;
}

double smoothed_objective(const LinearSurrogate& g, const Neighborhood& nb,
                          std::span<const int> f_preds, const FairObjectiveConfig& cfg) {
  SmoothObjective obj(nb, f_preds, cfg.lambda2);
  return obj.evaluate(surrogate_scores(g, nb), cfg.tau, nullptr) + cfg.lambda1 * complexity(g);
}

double exact_objective(const LinearSurrogate& g, const Neighborhood& nb,
                       const FairObjectiveConfig& cfg) {
  const PsiBreakdown b = psi(nb.f_preds, g, nb, cfg.tau);
  return fidelity_loss(g, nb) + cfg.lambda1 * complexity(g) + cfg.lambda2 * b.psi_hard;
}

SurrogateGradient smoothed_objective_gradient(const LinearSurrogate& g, const Neighborhood& nb,
                                              std::span<const int> f_preds,
                                              const FairObjectiveConfig& cfg) {
  SmoothObjective obj(nb, f_preds, cfg.lambda2);
  std::vector<double> d_score;
  obj.evaluate(surrogate_scores(g, nb), cfg.tau, &d_score);
  SurrogateGradient grad;
  grad.weights.assign(nb.n_features(), 0.0);
  for (std::size_t i = 0; i < nb.size(); ++i) {
    auto z = nb.samples.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) grad.weights[j] += d_score[i] * z[j];
    grad.intercept += d_score[i];
  }
  return grad;
}

Explanation fit_fair(const Neighborhood& nb, std::size_t max_features,
                     const FairObjectiveConfig& cfg) {
  cfg.validate();
  Explanation vanilla = explain_neighborhood(nb, max_features);
  vanilla.lambda1 = cfg.lambda1;
  vanilla.tau = cfg.tau;
  if (cfg.lambda2 == 0.0) return vanilla;

  SmoothObjective obj(nb, nb.f_preds, cfg.lambda2);
  // Optimize over the features forward selection picked, even where the
  // vanilla fit left a weight at exactly zero.
  LinearSurrogate selected = fit_lime(nb, max_features);
  ActiveSetProblem problem(nb, selected.active_set, obj);

  auto make_candidate = [&](LinearSurrogate g) {
    Candidate c;
    c.smooth = smoothed_objective(g, nb, nb.f_preds, cfg);
    c.exact = exact_objective(g, nb, cfg);
    c.surrogate = std::move(g);
    return c;
  };

  const Candidate start = make_candidate(vanilla.surrogate);
  Candidate best = start;
  const std::vector<double> theta0 = problem.from_surrogate(vanilla.surrogate);
  const std::vector<double> stages = temperature_schedule(cfg.tau);
  std::mt19937_64 rng(derive_seed(cfg.seed, {nb.seed, 0xfa1full}));
  std::normal_distribution<double> noise(0.0, cfg.restart_noise);

  auto consider = [&](const std::vector<double>& theta) {
    Candidate c = make_candidate(problem.to_surrogate(theta));
    // Never trade away the relaxed objective of the vanilla starting point.
    if (c.smooth <= start.smooth && better(c, best)) best = std::move(c);
  };

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> theta = theta0;
    if (r > 0)
      for (double& t : theta) t += noise(rng);
    for (double tau : stages) descend(problem, theta, tau, cfg, r);
    consider(theta);
    if (cfg.polish) {
      problem.polish(theta);
      consider(theta);
    }
  }

  Explanation e;
  e.surrogate = best.surrogate;
  e.center = nb.center;
  e.lambda1 = cfg.lambda1;
  e.lambda2 = cfg.lambda2;
  e.tau = cfg.tau;
  e.n_perturbations = nb.size();
  e.seed = nb.seed;
  e.restart_count = cfg.restarts;
  const PsiBreakdown b = psi(nb.f_preds, e.surrogate, nb, cfg.tau);
  e.objective.fidelity = fidelity_loss(e.surrogate, nb);
  e.objective.complexity = complexity(e.surrogate);
  e.objective.fairness = b.psi_hard;
  e.psi_smooth = b.psi_smooth;
  return e;
}

Explanation fair_lime_explain(const BlackBoxModel& f, std::span<const double> x,
                              const FeatureStats& stats, const LimeConfig& lime,
                              const FairObjectiveConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.lambda2 == 0.0) {
    Explanation e = lime_explain(f, x, stats, lime, seed);
    e.lambda1 = cfg.lambda1;
    e.tau = cfg.tau;
    return e;
  }
  std::uint64_t attempt_seed = seed;
  for (std::size_t attempt = 0; attempt <= cfg.max_resample; ++attempt) {
    if (attempt > 0) attempt_seed = derive_seed(seed, {attempt});
    Neighborhood nb = sample_neighborhood(x, stats, f, lime.kernel, attempt_seed, lime.sampling());
    if (nb.has_both_groups()) return fit_fair(nb, lime.max_features, cfg);
  }
  throw data_error("could not sample a neighborhood containing both groups in " +
                   std::to_string(cfg.max_resample + 1) + " attempts");
}

}  // namespace fairlime
