#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/surrogate.hpp"

namespace fairlime {

enum class MetricKind { demographic_parity, equalized_odds, equal_opportunity, predictive_parity };

std::string to_string(MetricKind kind);
// Accepts full names and the short forms dp, eo, eopp, pp.
MetricKind parse_metric_kind(const std::string& name);
bool needs_labels(MetricKind kind);

/// P(pred = 1 | group = 1) - P(pred = 1 | group = 0).
double demographic_parity(std::span<const int> preds, std::span<const int> groups);

struct EqualizedOddsGaps {
  double tpr_gap = 0.0;  // TPR(group 1) - TPR(group 0)
  double fpr_gap = 0.0;  // FPR(group 1) - FPR(group 0)
  double value() const;  // max(|tpr_gap|, |fpr_gap|)
};

EqualizedOddsGaps equalized_odds_gaps(std::span<const int> preds, std::span<const int> labels,
                                      std::span<const int> groups);

/// Group-1-minus-group-0 value of the metric. Throws MetricUndefined when a
/// conditioning set is empty and usage_error when labels are required but
/// missing.
double group_metric(MetricKind kind, std::span<const int> preds,
                    std::optional<std::span<const int>> labels, std::span<const int> groups);

struct MismatchReport {
  MetricKind metric = MetricKind::demographic_parity;
  double m_blackbox = 0.0;
  double m_surrogate = 0.0;
  double mismatch = 0.0;
  double epsilon = 0.0;
  bool preserved = true;
};

/// |M(f) - M(E_f)| over whatever population the vectors describe; preserved
/// iff mismatch <= epsilon.
MismatchReport fairness_mismatch(MetricKind kind, std::span<const int> f_preds,
                                 std::span<const int> e_preds, std::span<const int> groups,
                                 std::optional<std::span<const int>> labels, double epsilon);

struct CounterfactualReport {
  double f_delta = 0.0;      // f(x) - f(x')
  double e_delta = 0.0;      // g(x) - g(x'), g the surrogate fitted at x
  double discrepancy = 0.0;  // |f_delta - e_delta|
  std::optional<double> tolerance;
  std::optional<bool> preserved;  // set only when a tolerance is supplied
};

CounterfactualReport counterfactual_check(const BlackBoxModel& f, const Explanation& explanation,
                                          std::span<const double> x, std::size_t group_col,
                                          std::optional<double> tolerance = std::nullopt);

struct SensitiveImportance {
  double weight = 0.0;
  bool in_active_set = false;
  std::vector<std::string> notes;
};

/// The surrogate weight on the sensitive attribute, with advisory notes.
/// Deliberately carries no pass/fail verdict.
SensitiveImportance sensitive_importance(const Explanation& explanation, std::size_t group_col);

}  // namespace fairlime
