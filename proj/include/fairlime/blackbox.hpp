#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fairlime/dataset.hpp"
#include "fairlime/matrix.hpp"

namespace fairlime {

inline constexpr double kDecisionThreshold = 0.5;

/// Hard group-conditional threshold rule: positive iff
/// x[feature_col] > threshold for the row's group.
struct OracleModel {
  std::size_t n_features = 3;
  std::size_t group_col = 0;
  std::size_t feature_col = 2;
  double threshold_group0 = 6.0;
  double threshold_group1 = 5.0;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Fully connected layer, weights stored row-major as (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// input -> ReLU -> ReLU -> sigmoid. Inputs are standardized with the stored
/// per-feature mean and scale before the first layer.
struct Mlp3Model {
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  DenseLayer hidden1;
  DenseLayer hidden2;
  DenseLayer output;

  std::size_t n_features() const noexcept { return input_mean.size(); }
  friend bool operator==(const Mlp3Model&, const Mlp3Model&) = default;
};

enum class ModelVariant { oracle, logistic, mlp3 };

std::string to_string(ModelVariant v);

class BlackBoxModel {
 public:
  using Params = std::variant<OracleModel, LogisticModel, Mlp3Model>;

  BlackBoxModel(OracleModel m) : params_(std::move(m)) {}
  BlackBoxModel(LogisticModel m) : params_(std::move(m)) {}
  BlackBoxModel(Mlp3Model m) : params_(std::move(m)) {}

  ModelVariant variant() const noexcept { return static_cast<ModelVariant>(params_.index()); }
  std::size_t n_features() const;
  const Params& params() const noexcept { return params_; }

  /// Probability of the positive class, in [0,1]. Throws on a dimension
  /// mismatch.
  double score(std::span<const double> x) const;
  int predict(std::span<const double> x) const {
    return score(x) >= kDecisionThreshold ? 1 : 0;
  }

 private:
  Params params_;
};

/// Errors on a dimension mismatch or a group value outside {0,1}.
int oracle_predict(const OracleModel& model, std::span<const double> x);

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 8;
  std::uint64_t seed = 1;

  void validate(bool allow_zero_epochs = true) const;
};

// Full-batch gradient descent is monotone on the training loss below this
// learning rate for the default architecture on standardized inputs.
inline constexpr double kStableFullBatchLearningRate = 0.01;

/// Seeded He-normal initialization; inputs standardized by `ds` statistics.
Mlp3Model init_mlp(const TabularDataset& ds, const TrainConfig& cfg);

/// Mini-batch gradient descent on mean binary cross-entropy. epochs == 0
/// returns the initialization unchanged.
Mlp3Model train_mlp(const TabularDataset& ds, const TrainConfig& cfg);

struct MlpGradient {
  DenseLayer hidden1;
  DenseLayer hidden2;
  DenseLayer output;
};

/// Gradient of mean cross-entropy over the batch rows.
MlpGradient mlp_gradient(const Mlp3Model& model, const Matrix& x, std::span<const int> labels);

double mlp_loss(const Mlp3Model& model, const Matrix& x, std::span<const int> labels);

void save_model(const BlackBoxModel& model, const std::filesystem::path& path);
BlackBoxModel load_model(const std::filesystem::path& path,
                         std::optional<ModelVariant> expected = std::nullopt);

}  // namespace fairlime
