#include "fairlime/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "fairlime/error.hpp"

namespace fairlime {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<int> TabularDataset::groups() const {
  std::vector<int> g(n_rows());
  for (std::size_t i = 0; i < n_rows(); ++i) g[i] = static_cast<int>(rows(i, group_col));
  return g;
}

std::size_t TabularDataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw data_error("unknown feature '" + name + "'");
  return static_cast<std::size_t>(it - feature_names.begin());
}

void TabularDataset::validate() const {
  if (feature_names.size() != rows.cols())
    throw data_error("feature_names has " + std::to_string(feature_names.size()) +
                     " entries for " + std::to_string(rows.cols()) + " columns");
  if (feature_kinds.size() != rows.cols())
    throw data_error("feature_kinds length does not match column count");
  if (rows.cols() > 0 && group_col >= rows.cols())
    throw data_error("group column index out of range");
  for (std::size_t i = 0; i < n_rows(); ++i) {
    if (!is_binary_value(rows(i, group_col)))
      throw data_error("group value outside {0,1} at row " + std::to_string(i + 1));
  }
  if (labels) {
    if (labels->size() != n_rows()) throw data_error("label count does not match row count");
    for (std::size_t i = 0; i < labels->size(); ++i) {
      int y = (*labels)[i];
      if (y != 0 && y != 1)
        throw data_error("label value outside {0,1} at row " + std::to_string(i + 1));
    }
  }
}

TabularDataset TabularDataset::subset(const std::vector<std::size_t>& row_indices) const {
  TabularDataset out;
  out.feature_names = feature_names;
  out.group_col = group_col;
  out.label_name = label_name;
  out.feature_kinds = feature_kinds;
  out.rows = Matrix(row_indices.size(), n_features());
  if (labels) out.labels.emplace();
  for (std::size_t k = 0; k < row_indices.size(); ++k) {
    auto src = rows.row(row_indices[k]);
    std::copy(src.begin(), src.end(), out.rows.row(k).begin());
    if (labels) out.labels->push_back((*labels)[row_indices[k]]);
  }
  return out;
}

void SyntheticConfig::validate() const {
  if (n_rows < 10) throw usage_error("synthetic n_rows must be >= 10");
  if (!(minority_fraction > 0.0 && minority_fraction <= 0.5))
    throw usage_error("minority_fraction must lie in (0, 0.5]");
  if (!(noise_std > 0.0)) throw usage_error("noise_std must be > 0");
}

TabularDataset load_csv(const std::filesystem::path& path, const std::string& group_col_name,
                        const std::optional<std::string>& label_col_name) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path.string() + "' has no header row");
  auto header_fields = split_fields(line);
  std::vector<std::string> header(header_fields.begin(), header_fields.end());

  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw data_error("column '" + name + "' not found in '" + path.string() + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t group_src = find_col(group_col_name);
  std::optional<std::size_t> label_src;
  if (label_col_name) label_src = find_col(*label_col_name);

  TabularDataset ds;
  std::vector<std::size_t> feature_src;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (label_src && c == *label_src) continue;
    if (c == group_src) ds.group_col = feature_src.size();
    feature_src.push_back(c);
    ds.feature_names.push_back(header[c]);
  }
  if (label_src) {
    ds.labels.emplace();
    ds.label_name = *label_col_name;
  }

  std::vector<double> values(feature_src.size());
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw data_error("row " + std::to_string(data_row) + " has " +
                       std::to_string(fields.size()) + " cells, header has " +
                       std::to_string(header.size()));
    for (std::size_t k = 0; k < feature_src.size(); ++k) {
      const std::size_t c = feature_src[k];
      if (!parse_double(fields[c], values[k]))
        throw data_error("non-numeric cell at row " + std::to_string(data_row) +
                         ", column '" + header[c] + "': '" + std::string(fields[c]) + "'");
    }
    if (!is_binary_value(values[ds.group_col]))
      throw data_error("group column '" + group_col_name + "' has value " +
                       std::string(fields[group_src]) + " outside {0,1} at row " +
                       std::to_string(data_row));
    if (label_src) {
      double y = 0.0;
      if (!parse_double(fields[*label_src], y))
        throw data_error("non-numeric cell at row " + std::to_string(data_row) +
                         ", column '" + header[*label_src] + "'");
      if (!is_binary_value(y))
        throw data_error("label column '" + *label_col_name + "' has value outside {0,1} at row " +
                         std::to_string(data_row));
      ds.labels->push_back(static_cast<int>(y));
    }
    ds.rows.append_row(values);
  }
  if (ds.rows.empty()) ds.rows = Matrix(0, feature_src.size());

  ds.feature_kinds.assign(ds.n_features(), FeatureKind::binary);
  for (std::size_t i = 0; i < ds.n_rows(); ++i)
    for (std::size_t j = 0; j < ds.n_features(); ++j)
      if (!is_binary_value(ds.rows(i, j))) ds.feature_kinds[j] = FeatureKind::continuous;
  if (ds.n_rows() == 0) ds.feature_kinds.assign(ds.n_features(), FeatureKind::continuous);
  ds.feature_kinds[ds.group_col] = FeatureKind::binary;
  return ds;
}

void write_csv(const TabularDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < ds.n_features(); ++j) {
    if (j) out << ',';
    out << ds.feature_names[j];
  }
  if (ds.labels) out << ',' << ds.label_name;
  out << '\n';
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      if (j) out << ',';
      out << format_double(ds.rows(i, j));
    }
    if (ds.labels) out << ',' << (*ds.labels)[i];
    out << '\n';
  }
  if (!out) throw data_error("write to '" + path.string() + "' failed");
}

TabularDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = std::min(cfg.boundary_majority, cfg.boundary_minority) - 3.0;
  const double hi = std::max(cfg.boundary_majority, cfg.boundary_minority) + 3.0;
  std::uniform_real_distribution<double> x1_base(lo, hi);
  std::normal_distribution<double> normal(0.0, 1.0);

  TabularDataset ds;
  ds.feature_names = {"g", "x0", "x1"};
  ds.feature_kinds = {FeatureKind::binary, FeatureKind::continuous, FeatureKind::continuous};
  ds.group_col = 0;
  ds.label_name = "y";
  ds.labels.emplace();
  ds.labels->reserve(cfg.n_rows);
  ds.rows = Matrix(cfg.n_rows, 3);
  for (std::size_t i = 0; i < cfg.n_rows; ++i) {
    const double g = unit(rng) < cfg.minority_fraction ? 0.0 : 1.0;
    const double x0 = cfg.x0_group_shift * g + normal(rng);
    const double x1 = x1_base(rng) + cfg.noise_std * normal(rng);
    ds.rows(i, 0) = g;
    ds.rows(i, 1) = x0;
    ds.rows(i, 2) = x1;
    const double threshold = g == 0.0 ? cfg.boundary_minority : cfg.boundary_majority;
    ds.labels->push_back(x1 > threshold ? 1 : 0);
  }
  return ds;
}

FeatureStats feature_stats(const TabularDataset& ds) {
  const std::size_t n = ds.n_rows();
  if (n < 2) throw data_error("feature_stats needs at least 2 rows, got " + std::to_string(n));
  const std::size_t d = ds.n_features();
  FeatureStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  st.one_frequency.assign(d, std::numeric_limits<double>::quiet_NaN());
  st.kinds = ds.feature_kinds;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ds.rows(i, j);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ds.rows(i, j) - mean;
      ss += r * r;
    }
    st.mean[j] = mean;
    st.stddev[j] = std::sqrt(ss / static_cast<double>(n - 1));
    if (ds.feature_kinds[j] == FeatureKind::binary) {
      std::size_t ones = 0;
      for (std::size_t i = 0; i < n; ++i) ones += ds.rows(i, j) == 1.0;
      st.one_frequency[j] = static_cast<double>(ones) / static_cast<double>(n);
    }
  }
  return st;
}

std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds, double train_fraction,
                                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw usage_error("train_fraction must lie in (0,1)");
  const std::size_t n = ds.n_rows();
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_train >= n)
    throw usage_error("split of " + std::to_string(n) + " rows at fraction " +
                      std::to_string(train_fraction) + " leaves an empty part");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace fairlime
