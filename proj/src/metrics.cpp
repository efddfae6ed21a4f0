#include "fairlime/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fairlime/error.hpp"
#include "fairlime/neighborhood.hpp"

namespace fairlime {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw data_error(std::string(what) + ": vectors have lengths " + std::to_string(a) + " and " +
                     std::to_string(b));
}

void check_binary(std::span<const int> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0 && v[i] != 1)
      throw data_error(std::string(what) + " value outside {0,1} at index " + std::to_string(i));
}

struct GroupCounts {
  std::size_t n[2] = {0, 0};
  std::size_t hits[2] = {0, 0};
};

// Rate of pred==1 among rows passing `condition`, per group.
template <class Condition>
GroupCounts conditional_rate(std::span<const int> preds, std::span<const int> groups,
                             Condition condition) {
  GroupCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!condition(i)) continue;
    const int g = groups[i];
    ++c.n[g];
    c.hits[g] += preds[i] == 1;
  }
  return c;
}

double rate_gap(const GroupCounts& c, const std::string& what) {
  if (c.n[0] == 0 || c.n[1] == 0) throw MetricUndefined(what, c.n[0], c.n[1]);
  return static_cast<double>(c.hits[1]) / static_cast<double>(c.n[1]) -
         static_cast<double>(c.hits[0]) / static_cast<double>(c.n[0]);
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::demographic_parity: return "demographic_parity";
    case MetricKind::equalized_odds: return "equalized_odds";
    case MetricKind::equal_opportunity: return "equal_opportunity";
    case MetricKind::predictive_parity: return "predictive_parity";
  }
  return "unknown";
}

MetricKind parse_metric_kind(const std::string& name) {
  if (name == "dp" || name == "demographic_parity") return MetricKind::demographic_parity;
  if (name == "eo" || name == "equalized_odds") return MetricKind::equalized_odds;
  if (name == "eopp" || name == "equal_opportunity") return MetricKind::equal_opportunity;
  if (name == "pp" || name == "predictive_parity") return MetricKind::predictive_parity;
  throw usage_error("unknown metric '" + name + "' (expected dp, eo, eopp or pp)");
}

bool needs_labels(MetricKind kind) { return kind != MetricKind::demographic_parity; }

double demographic_parity(std::span<const int> preds, std::span<const int> groups) {
  check_lengths(preds.size(), groups.size(), "demographic_parity");
  check_binary(preds, "prediction");
  check_binary(groups, "group");
  return rate_gap(conditional_rate(preds, groups, [](std::size_t) { return true; }),
                  "demographic parity needs members in both groups");
}

double EqualizedOddsGaps::value() const { return std::max(std::abs(tpr_gap), std::abs(fpr_gap)); }

EqualizedOddsGaps equalized_odds_gaps(std::span<const int> preds, std::span<const int> labels,
                                      std::span<const int> groups) {
  check_lengths(preds.size(), groups.size(), "equalized_odds");
  check_lengths(labels.size(), groups.size(), "equalized_odds");
  check_binary(preds, "prediction");
  check_binary(labels, "label");
  check_binary(groups, "group");
  EqualizedOddsGaps gaps;
  gaps.tpr_gap = rate_gap(conditional_rate(preds, groups, [&](std::size_t i) { return labels[i] == 1; }),
                          "true positive rate needs positive labels in both groups");
  gaps.fpr_gap = rate_gap(conditional_rate(preds, groups, [&](std::size_t i) { return labels[i] == 0; }),
                          "false positive rate needs negative labels in both groups");
  return gaps;
}

double group_metric(MetricKind kind, std::span<const int> preds,
                    std::optional<std::span<const int>> labels, std::span<const int> groups) {
  if (kind == MetricKind::demographic_parity) return demographic_parity(preds, groups);
  if (!labels) throw usage_error(to_string(kind) + " requires ground-truth labels");
  const auto y = *labels;
  check_lengths(preds.size(), groups.size(), "group_metric");
  check_lengths(y.size(), groups.size(), "group_metric");
  check_binary(preds, "prediction");
  check_binary(y, "label");
  check_binary(groups, "group");
  switch (kind) {
    case MetricKind::equalized_odds:
      return equalized_odds_gaps(preds, y, groups).value();
    case MetricKind::equal_opportunity:
      return rate_gap(conditional_rate(preds, groups, [&](std::size_t i) { return y[i] == 1; }),
                      "equal opportunity needs positive labels in both groups");
    case MetricKind::predictive_parity:
      // PPV: P(y = 1 | pred = 1); roles of preds and labels swap.
      return rate_gap(conditional_rate(y, groups, [&](std::size_t i) { return preds[i] == 1; }),
                      "predictive parity needs positive predictions in both groups");
    case MetricKind::demographic_parity:
      break;
  }
  return demographic_parity(preds, groups);
}

MismatchReport fairness_mismatch(MetricKind kind, std::span<const int> f_preds,
                                 std::span<const int> e_preds, std::span<const int> groups,
                                 std::optional<std::span<const int>> labels, double epsilon) {
  if (!(epsilon >= 0.0)) throw usage_error("epsilon must be >= 0");
  check_lengths(f_preds.size(), e_preds.size(), "fairness_mismatch");
  MismatchReport r;
  r.metric = kind;
  r.epsilon = epsilon;
  try {
    r.m_blackbox = group_metric(kind, f_preds, labels, groups);
  } catch (const MetricUndefined& e) {
    throw e.with_side("blackbox");
  }
  try {
    r.m_surrogate = group_metric(kind, e_preds, labels, groups);
  } catch (const MetricUndefined& e) {
    throw e.with_side("surrogate");
  }
  r.mismatch = std::abs(r.m_blackbox - r.m_surrogate);
  r.preserved = r.mismatch <= epsilon;
  return r;
}

CounterfactualReport counterfactual_check(const BlackBoxModel& f, const Explanation& explanation,
                                          std::span<const double> x, std::size_t group_col,
                                          std::optional<double> tolerance) {
  const std::vector<double> flipped = flip_group(x, group_col);
  CounterfactualReport r;
  r.f_delta = f.score(x) - f.score(flipped);
  r.e_delta = surrogate_score(explanation.surrogate, x) -
              surrogate_score(explanation.surrogate, flipped);
  r.discrepancy = std::abs(r.f_delta - r.e_delta);
  if (tolerance) {
    if (!(*tolerance >= 0.0)) throw usage_error("counterfactual tolerance must be >= 0");
    r.tolerance = tolerance;
    r.preserved = r.discrepancy <= *tolerance;
  }
  return r;
}

SensitiveImportance sensitive_importance(const Explanation& explanation, std::size_t group_col) {
  const auto& g = explanation.surrogate;
  if (group_col >= g.weights.size()) throw data_error("sensitive_importance: group column out of range");
  SensitiveImportance s;
  s.weight = g.weights[group_col];
  s.in_active_set =
      std::find(g.active_set.begin(), g.active_set.end(), group_col) != g.active_set.end();
  s.notes.push_back(
      "a zero weight on the sensitive attribute is not evidence of fairness: correlated "
      "features may carry its influence, and fairness interventions often use the attribute "
      "explicitly");
  if (!s.in_active_set)
    s.notes.push_back("sensitive attribute excluded from the surrogate by feature selection");
  return s;
}

}  // namespace fairlime
