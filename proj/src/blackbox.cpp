#include "fairlime/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fairlime/error.hpp"
#include "fairlime/seed.hpp"

namespace fairlime {

namespace {

constexpr const char* kModelMagic = "fairlime-model";
constexpr int kModelVersion = 1;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_dims(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw data_error("model expects " + std::to_string(expected) + " features, got " +
                     std::to_string(got));
}

// Activations kept for backpropagation.
struct Forward {
  std::vector<double> input;
  std::vector<double> pre1, act1;
  std::vector<double> pre2, act2;
  double logit = 0.0;
  double prob = 0.0;
};

void dense(const DenseLayer& layer, const std::vector<double>& in, std::vector<double>& out) {
  out.assign(layer.out, 0.0);
  for (std::size_t o = 0; o < layer.out; ++o) {
    double s = layer.bias[o];
    const double* w = layer.weights.data() + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * in[i];
    out[o] = s;
  }
}

void forward(const Mlp3Model& m, std::span<const double> x, Forward& f) {
  const std::size_t d = m.n_features();
  f.input.resize(d);
  for (std::size_t j = 0; j < d; ++j) f.input[j] = (x[j] - m.input_mean[j]) / m.input_scale[j];
  dense(m.hidden1, f.input, f.pre1);
  f.act1.resize(f.pre1.size());
  for (std::size_t k = 0; k < f.pre1.size(); ++k) f.act1[k] = std::max(0.0, f.pre1[k]);
  dense(m.hidden2, f.act1, f.pre2);
  f.act2.resize(f.pre2.size());
  for (std::size_t k = 0; k < f.pre2.size(); ++k) f.act2[k] = std::max(0.0, f.pre2[k]);
  std::vector<double> out;
  dense(m.output, f.act2, out);
  f.logit = out[0];
  f.prob = sigmoid(f.logit);
}

double mlp_score(const Mlp3Model& m, std::span<const double> x) {
  Forward f;
  forward(m, x, f);
  return f.prob;
}

DenseLayer zero_like(const DenseLayer& l) {
  DenseLayer g;
  g.in = l.in;
  g.out = l.out;
  g.weights.assign(l.weights.size(), 0.0);
  g.bias.assign(l.bias.size(), 0.0);
  return g;
}

DenseLayer he_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.weights.resize(in * out);
  l.bias.assign(out, 0.0);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
  for (double& w : l.weights) w = normal(rng);
  return l;
}

// --- serialization -------------------------------------------------------

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_vec(std::ostream& out, const std::string& key, const std::vector<double>& v) {
  out << key << ' ' << v.size();
  for (double x : v) out << ' ' << fmt(x);
  out << '\n';
}

void write_layer(std::ostream& out, const std::string& name, const DenseLayer& l) {
  out << name << ".shape " << l.out << ' ' << l.in << '\n';
  write_vec(out, name + ".weights", l.weights);
  write_vec(out, name + ".bias", l.bias);
}

class KeyValueFile {
 public:
  explicit KeyValueFile(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open model file '" + path_ + "'");
    std::string line;
    bool saw_end = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "end") {
        saw_end = true;
        break;
      }
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (lineno == 1) {
        if (key != kModelMagic || toks.size() != 1)
          throw data_error("'" + path_ + "' is not a model file (bad header)");
        if (toks[0] != "v" + std::to_string(kModelVersion))
          throw data_error("model file version " + toks[0] + " unsupported (expected v" +
                           std::to_string(kModelVersion) + ")");
        continue;
      }
      entries_[key] = std::move(toks);
    }
    if (lineno == 0) throw data_error("model file '" + path_ + "' is empty");
    if (!saw_end) throw data_error("model file '" + path_ + "' is truncated (no end marker)");
  }

  const std::vector<std::string>& get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw data_error("model file '" + path_ + "' is missing key '" + key + "'");
    return it->second;
  }

  std::string text(const std::string& key) const {
    const auto& v = get(key);
    if (v.size() != 1) throw data_error("malformed value for '" + key + "'");
    return v[0];
  }

  double number(const std::string& key) const { return parse(text(key), key); }

  std::size_t count(const std::string& key) const {
    const double v = number(key);
    if (v < 0 || v != std::floor(v)) throw data_error("malformed count for '" + key + "'");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> vec(const std::string& key) const {
    const auto& v = get(key);
    if (v.empty()) throw data_error("malformed vector for '" + key + "'");
    const double n = parse(v[0], key);
    if (n < 0 || n != std::floor(n) || static_cast<std::size_t>(n) != v.size() - 1)
      throw data_error("vector '" + key + "' length does not match its payload");
    std::vector<double> out;
    out.reserve(v.size() - 1);
    for (std::size_t i = 1; i < v.size(); ++i) out.push_back(parse(v[i], key));
    return out;
  }

  DenseLayer layer(const std::string& name) const {
    const auto& shape = get(name + ".shape");
    if (shape.size() != 2) throw data_error("malformed shape for '" + name + "'");
    DenseLayer l;
    l.out = static_cast<std::size_t>(parse(shape[0], name));
    l.in = static_cast<std::size_t>(parse(shape[1], name));
    l.weights = vec(name + ".weights");
    l.bias = vec(name + ".bias");
    if (l.weights.size() != l.in * l.out || l.bias.size() != l.out)
      throw data_error("layer '" + name + "' parameters do not match its shape");
    return l;
  }

 private:
  double parse(const std::string& s, const std::string& key) const {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw data_error("model file '" + path_ + "': unparsable number '" + s + "' for '" + key +
                       "'");
    }
  }

  std::string path_;
  std::map<std::string, std::vector<std::string>> entries_;
};

}  // namespace

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::oracle: return "oracle";
    case ModelVariant::logistic: return "logistic";
    case ModelVariant::mlp3: return "mlp3";
  }
  return "unknown";
}

std::size_t BlackBoxModel::n_features() const {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OracleModel>) return m.n_features;
        else if constexpr (std::is_same_v<T, LogisticModel>) return m.weights.size();
        else return m.n_features();
      },
      params_);
}

double BlackBoxModel::score(std::span<const double> x) const {
  check_dims(n_features(), x.size());
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OracleModel>) {
          return static_cast<double>(oracle_predict(m, x));
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          double z = m.intercept;
          for (std::size_t j = 0; j < x.size(); ++j) z += m.weights[j] * x[j];
          return sigmoid(z);
        } else {
          return mlp_score(m, x);
        }
      },
      params_);
}

int oracle_predict(const OracleModel& model, std::span<const double> x) {
  check_dims(model.n_features, x.size());
  const double g = x[model.group_col];
  if (g != 0.0 && g != 1.0)
    throw data_error("oracle: group value " + fmt(g) + " outside {0,1}");
  const double threshold = g == 0.0 ? model.threshold_group0 : model.threshold_group1;
  return x[model.feature_col] > threshold ? 1 : 0;
}

void TrainConfig::validate(bool allow_zero_epochs) const {
  if (!allow_zero_epochs && epochs == 0) throw usage_error("epochs must be positive");
  if (!(learning_rate > 0.0)) throw usage_error("learning_rate must be positive");
  if (batch_size == 0) throw usage_error("batch_size must be positive");
  if (hidden1 == 0 || hidden2 == 0) throw usage_error("hidden widths must be positive");
}

Mlp3Model init_mlp(const TabularDataset& ds, const TrainConfig& cfg) {
  const std::size_t d = ds.n_features();
  Mlp3Model m;
  m.input_mean.assign(d, 0.0);
  m.input_scale.assign(d, 1.0);
  if (ds.n_rows() >= 2) {
    FeatureStats st = feature_stats(ds);
    for (std::size_t j = 0; j < d; ++j) {
      m.input_mean[j] = st.mean[j];
      m.input_scale[j] = st.stddev[j] > 0.0 ? st.stddev[j] : 1.0;
    }
  }
  std::mt19937_64 rng(cfg.seed);
  m.hidden1 = he_layer(d, cfg.hidden1, rng);
  m.hidden2 = he_layer(cfg.hidden1, cfg.hidden2, rng);
  m.output = he_layer(cfg.hidden2, 1, rng);
  return m;
}

MlpGradient mlp_gradient(const Mlp3Model& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) throw data_error("mlp_gradient: empty batch");
  if (labels.size() != x.rows()) throw data_error("mlp_gradient: label count mismatch");
  check_dims(model.n_features(), x.cols());

  MlpGradient g{zero_like(model.hidden1), zero_like(model.hidden2), zero_like(model.output)};
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Forward f;
  std::vector<double> delta2(model.hidden2.out), delta1(model.hidden1.out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward(model, x.row(r), f);
    // d(BCE)/d(logit) = p - y
    const double d_out = (f.prob - static_cast<double>(labels[r])) * inv_n;
    g.output.bias[0] += d_out;
    for (std::size_t k = 0; k < model.hidden2.out; ++k) {
      g.output.weights[k] += d_out * f.act2[k];
      delta2[k] = f.pre2[k] > 0.0 ? d_out * model.output.w(0, k) : 0.0;
    }
    for (std::size_t k = 0; k < model.hidden2.out; ++k) {
      if (delta2[k] == 0.0) continue;
      g.hidden2.bias[k] += delta2[k];
      for (std::size_t i = 0; i < model.hidden2.in; ++i)
        g.hidden2.weights[k * model.hidden2.in + i] += delta2[k] * f.act1[i];
    }
    for (std::size_t i = 0; i < model.hidden1.out; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < model.hidden2.out; ++k) s += delta2[k] * model.hidden2.w(k, i);
      delta1[i] = f.pre1[i] > 0.0 ? s : 0.0;
    }
    for (std::size_t i = 0; i < model.hidden1.out; ++i) {
      if (delta1[i] == 0.0) continue;
      g.hidden1.bias[i] += delta1[i];
      for (std::size_t j = 0; j < model.hidden1.in; ++j)
        g.hidden1.weights[i * model.hidden1.in + j] += delta1[i] * f.input[j];
    }
  }
  return g;
}

double mlp_loss(const Mlp3Model& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) throw data_error("mlp_loss: empty batch");
  Forward f;
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward(model, x.row(r), f);
    // log(1 + e^{-z}) for y=1, log(1 + e^{z}) for y=0, computed stably.
    const double z = labels[r] ? f.logit : -f.logit;
    total += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return total / static_cast<double>(x.rows());
}

Mlp3Model train_mlp(const TabularDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (!ds.labels) throw data_error("train_mlp: dataset has no label column");
  std::size_t pos = 0;
  for (int y : *ds.labels) pos += y == 1;
  const std::size_t neg = ds.n_rows() - pos;
  if (pos < 2 || neg < 2)
    throw data_error("train_mlp: need at least 2 rows per class (positives " +
                     std::to_string(pos) + ", negatives " + std::to_string(neg) + ")");

  Mlp3Model model = init_mlp(ds, cfg);
  std::mt19937_64 rng(derive_seed(cfg.seed, {0x5u}));
  std::vector<std::size_t> order(ds.n_rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto step = [&](DenseLayer& layer, const DenseLayer& grad) {
    for (std::size_t k = 0; k < layer.weights.size(); ++k)
      layer.weights[k] -= cfg.learning_rate * grad.weights[k];
    for (std::size_t k = 0; k < layer.bias.size(); ++k)
      layer.bias[k] -= cfg.learning_rate * grad.bias[k];
  };

  const std::size_t batch = std::min(cfg.batch_size, ds.n_rows());
  Matrix xb;
  std::vector<int> yb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      xb = Matrix(end - start, ds.n_features());
      yb.resize(end - start);
      for (std::size_t k = start; k < end; ++k) {
        auto src = ds.rows.row(order[k]);
        std::copy(src.begin(), src.end(), xb.row(k - start).begin());
        yb[k - start] = (*ds.labels)[order[k]];
      }
      MlpGradient g = mlp_gradient(model, xb, yb);
      step(model.hidden1, g.hidden1);
      step(model.hidden2, g.hidden2);
      step(model.output, g.output);
    }
  }
  return model;
}

void save_model(const BlackBoxModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write model file '" + path.string() + "'");
  out << kModelMagic << " v" << kModelVersion << '\n';
  out << "variant " << to_string(model.variant()) << '\n';
  out << "n_features " << model.n_features() << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OracleModel>) {
          out << "group_col " << m.group_col << '\n';
          out << "feature_col " << m.feature_col << '\n';
          out << "threshold_group0 " << fmt(m.threshold_group0) << '\n';
          out << "threshold_group1 " << fmt(m.threshold_group1) << '\n';
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          write_vec(out, "weights", m.weights);
          out << "intercept " << fmt(m.intercept) << '\n';
        } else {
          write_vec(out, "input_mean", m.input_mean);
          write_vec(out, "input_scale", m.input_scale);
          write_layer(out, "hidden1", m.hidden1);
          write_layer(out, "hidden2", m.hidden2);
          write_layer(out, "output", m.output);
        }
      },
      model.params());
  out << "end\n";
  if (!out) throw data_error("write to model file '" + path.string() + "' failed");
}

BlackBoxModel load_model(const std::filesystem::path& path, std::optional<ModelVariant> expected) {
  KeyValueFile kv(path);
  const std::string tag = kv.text("variant");
  ModelVariant variant;
  if (tag == "oracle") variant = ModelVariant::oracle;
  else if (tag == "logistic") variant = ModelVariant::logistic;
  else if (tag == "mlp3") variant = ModelVariant::mlp3;
  else throw data_error("model file '" + path.string() + "' has unknown variant '" + tag + "'");
  if (expected && *expected != variant)
    throw data_error("model file '" + path.string() + "' holds variant '" + tag +
                     "', expected '" + to_string(*expected) + "'");

  const std::size_t d = kv.count("n_features");
  switch (variant) {
    case ModelVariant::oracle: {
      OracleModel m;
      m.n_features = d;
      m.group_col = kv.count("group_col");
      m.feature_col = kv.count("feature_col");
      m.threshold_group0 = kv.number("threshold_group0");
      m.threshold_group1 = kv.number("threshold_group1");
      if (m.group_col >= d || m.feature_col >= d)
        throw data_error("oracle column index out of range");
      return BlackBoxModel(m);
    }
    case ModelVariant::logistic: {
      LogisticModel m;
      m.weights = kv.vec("weights");
      m.intercept = kv.number("intercept");
      if (m.weights.size() != d) throw data_error("logistic weight count mismatch");
      return BlackBoxModel(m);
    }
    case ModelVariant::mlp3: {
      Mlp3Model m;
      m.input_mean = kv.vec("input_mean");
      m.input_scale = kv.vec("input_scale");
      m.hidden1 = kv.layer("hidden1");
      m.hidden2 = kv.layer("hidden2");
      m.output = kv.layer("output");
      if (m.input_mean.size() != d || m.input_scale.size() != d || m.hidden1.in != d ||
          m.hidden2.in != m.hidden1.out || m.output.in != m.hidden2.out || m.output.out != 1)
        throw data_error("mlp3 layer shapes are inconsistent");
      return BlackBoxModel(m);
    }
  }
  throw data_error("unreachable model variant");
}

}  // namespace fairlime
