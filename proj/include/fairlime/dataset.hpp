#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairlime/matrix.hpp"

namespace fairlime {

enum class FeatureKind { continuous, binary };

/// Tabular classification data with a binary sensitive attribute.
///
/// `rows` holds model inputs only. The ground-truth label, when present, is
/// kept beside the matrix so that black-box models never see it as a feature;
/// on disk it is one more CSV column.
struct TabularDataset {
  std::vector<std::string> feature_names;
  Matrix rows;
  std::size_t group_col = 0;
  std::optional<std::vector<int>> labels;
  std::string label_name;
  std::vector<FeatureKind> feature_kinds;

  std::size_t n_rows() const noexcept { return rows.rows(); }
  std::size_t n_features() const noexcept { return rows.cols(); }
  bool has_labels() const noexcept { return labels.has_value(); }

  std::vector<int> groups() const;
  std::size_t feature_index(const std::string& name) const;

  // Throws data_error on a broken invariant (group values, label values,
  // name/column count agreement).
  void validate() const;

  TabularDataset subset(const std::vector<std::size_t>& row_indices) const;
};

/// Parameters for the two-group boundary scenario. Group 0 is the minority
/// and is labelled positive above `boundary_minority`; group 1 above
/// `boundary_majority`.
struct SyntheticConfig {
  std::size_t n_rows = 10000;
  double minority_fraction = 0.27;
  double boundary_majority = 5.0;
  double boundary_minority = 6.0;
  double x0_group_shift = 2.0;
  double noise_std = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
  friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  // Frequency of value 1 for binary features; NaN for continuous ones.
  std::vector<double> one_frequency;
  std::vector<FeatureKind> kinds;

  std::size_t size() const noexcept { return mean.size(); }
  bool is_constant(std::size_t j) const { return stddev.at(j) == 0.0; }
};

TabularDataset load_csv(const std::filesystem::path& path,
                        const std::string& group_col_name,
                        const std::optional<std::string>& label_col_name);

// Values are written with 17 significant digits so a reload is exact.
void write_csv(const TabularDataset& ds, const std::filesystem::path& path);

/// Columns: g (group), x0, x1; label column y holds the oracle's decision.
TabularDataset generate_synthetic(const SyntheticConfig& cfg);

FeatureStats feature_stats(const TabularDataset& ds);

/// Seeded shuffle, then the first floor(train_fraction * n) rows (with a 1e-9
/// allowance for decimal representation error) form the training part and the
/// remainder the test part. Both parts keep the original row order.
std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds,
                                                double train_fraction,
                                                std::uint64_t seed);

}  // namespace fairlime
