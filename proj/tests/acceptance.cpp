// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fairlime/error.hpp"
#include "fairlime/experiments.hpp"
#include "fairlime/fair_objective.hpp"
#include "fairlime/metrics.hpp"
#include "fairlime/seed.hpp"
#include "grid_search_oracle.hpp"
#include "instances.hpp"

using namespace fairlime;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), std::uint64_t{0});
  return s;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double scale = std::max(norm(a), norm(b));
  return scale > 0.0 ? norm(d) / scale : 0.0;
}

Outcome boundary_027() {
  const auto t0 = Clock::now();
  SyntheticConfig cfg;
  cfg.minority_fraction = 0.27;
  const BoundaryReport r = run_boundary_experiment(cfg, KernelConfig::defaults(3, 5000), seed_range(20));
  const double secs = seconds_since(t0);
  const double b = r.mean_boundary;
  const bool ok = std::abs(b - 5.0) < std::abs(b - 6.0) && b < 5.45 && secs <= 120.0;
  return {ok, "mean boundary " + fmt(b) + " (std " + fmt(r.std_boundary, 3) + ", " +
                  std::to_string(r.degenerate_count) + " degenerate) in " + fmt(secs, 3) + " s"};
}

Outcome boundary_050() {
  SyntheticConfig cfg;
  cfg.minority_fraction = 0.5;
  const BoundaryReport r = run_boundary_experiment(cfg, KernelConfig::defaults(3, 5000), seed_range(20));
  const double b = r.mean_boundary;
  return {b >= 5.2 && b <= 5.8, "mean boundary " + fmt(b)};
}

Outcome sweep() {
  const auto t0 = Clock::now();
  SyntheticConfig sc;
  const TabularDataset ds = generate_synthetic(sc);
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  cfg.lambda2 = 5.0;
  const SweepReport r =
      run_perturbation_sweep(ds, oracle, {100, 200, 500, 1000, 2000}, cfg, seed_range(20));
  const double secs = seconds_since(t0);
  bool ok = secs <= 600.0;
  std::string detail;
  for (std::size_t c = 0; c < r.counts.size(); ++c) {
    ok = ok && r.fair[c].mean_psi <= r.vanilla[c].mean_psi;
    detail += std::to_string(r.counts[c]) + ": " + fmt(r.vanilla[c].mean_psi, 3) + " vs " +
              fmt(r.fair[c].mean_psi, 3) + "; ";
  }
  const double v = r.vanilla.back().mean_psi, f = r.fair.back().mean_psi;
  const double gain = v > 0.0 ? (v - f) / v : 0.0;
  ok = ok && gain >= 0.10;
  return {ok, "vanilla vs fair psi " + detail + "improvement at 2000 " + fmt(100.0 * gain, 3) +
                  "% in " + fmt(secs, 4) + " s"};
}

Outcome grid_oracle() {
  const auto t0 = Clock::now();
  fairlime::testing::TwoFeatureWorld world;
  const FairObjectiveConfig cfg = fairlime::testing::oracle_comparison_config();
  const auto spec = fairlime::testing::two_feature_grid();
  LimeConfig lime;
  lime.kernel = KernelConfig::defaults(2, 1000);
  lime.max_features = 2;
  std::size_t compared = 0, within = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 60; ++i) {
    const std::vector<double> x = world.center(i);
    const Explanation e = fair_lime_explain(world.model, x, world.stats, lime, cfg, derive_seed(5, {i}));
    const Neighborhood nb = sample_neighborhood(x, world.stats, world.model, lime.kernel, e.seed, lime.sampling());
    const double solver = exact_objective(e.surrogate, nb, cfg);
    const auto grid = fairlime::testing::grid_search_oracle(nb, lime.max_features, cfg, spec);
    const double rel = std::abs(solver - grid.objective) / grid.objective;
    worst = std::max(worst, rel);
    ++compared;
    within += rel <= 1e-2;
  }
  const double secs = seconds_since(t0);
  return {compared >= 50 && within == compared && secs <= 300.0,
          std::to_string(within) + "/" + std::to_string(compared) + " within 1e-2 (worst " +
              fmt(worst, 3) + ") in " + fmt(secs, 4) + " s"};
}

Outcome gradients() {
  const double h = 1e-5;
  // Smoothed objective gradient on the boundary scenario.
  SyntheticConfig sc;
  const TabularDataset ds = generate_synthetic(sc);
  const FeatureStats stats = feature_stats(ds);
  const BlackBoxModel oracle(OracleModel{});
  FairObjectiveConfig cfg;
  cfg.lambda2 = 5.0;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t smooth_points = 0;
  double smooth_worst = 0.0;
  for (std::uint64_t p = 0; smooth_points < 25 && p < 500; ++p) {
    const std::vector<double> x = {static_cast<double>(p % 2), 1.0, 4.8 + 0.1 * static_cast<double>(p % 13)};
    const Neighborhood nb = sample_neighborhood(x, stats, oracle, KernelConfig::defaults(3, 400), p);
    if (!nb.has_both_groups()) continue;
    LinearSurrogate g{{0.3 * normal(rng), 0.05 * normal(rng), 0.3 + 0.1 * normal(rng)}, 0.0, {0, 1, 2}};
    g.intercept = 0.5 - surrogate_score(g, x) + 0.05 * normal(rng);
    const PsiBreakdown b = psi(nb.f_preds, g, nb, cfg.tau);
    if (std::abs(b.dp_blackbox - b.dp_surrogate_smooth) <= 1e-3) continue;
    const SurrogateGradient grad = smoothed_objective_gradient(g, nb, nb.f_preds, cfg);
    std::vector<double> analytic = grad.weights;
    analytic.push_back(grad.intercept);
    std::vector<double> numeric;
    for (std::size_t j = 0; j <= g.weights.size(); ++j) {
      double& v = j < g.weights.size() ? g.weights[j] : g.intercept;
      const double saved = v;
      v = saved + h;
      const double up = smoothed_objective(g, nb, nb.f_preds, cfg);
      v = saved - h;
      const double down = smoothed_objective(g, nb, nb.f_preds, cfg);
      v = saved;
      numeric.push_back((up - down) / (2.0 * h));
    }
    smooth_worst = std::max(smooth_worst, relative_error(analytic, numeric));
    ++smooth_points;
  }

  // MLP parameter gradient.
  const TabularDataset sep = fairlime::testing::separable_dataset(4, 64);
  std::size_t mlp_points = 0;
  double mlp_worst = 0.0;
  for (std::uint64_t p = 0; p < 25; ++p) {
    TrainConfig tc;
    tc.seed = 500 + p;
    Mlp3Model m = init_mlp(sep, tc);
    std::vector<int> y(sep.labels->begin(), sep.labels->begin() + 32);
    Matrix xb(32, 2);
    for (std::size_t i = 0; i < 32; ++i) {
      xb(i, 0) = sep.rows(i, 0);
      xb(i, 1) = sep.rows(i, 1) + 0.3 * normal(rng);
    }
    const MlpGradient grad = mlp_gradient(m, xb, y);
    std::vector<double> analytic, numeric;
    auto visit = [&](DenseLayer& layer, const DenseLayer& gl) {
      for (std::size_t k = 0; k < layer.weights.size() + layer.bias.size(); ++k) {
        const bool is_w = k < layer.weights.size();
        double& v = is_w ? layer.weights[k] : layer.bias[k - layer.weights.size()];
        analytic.push_back(is_w ? gl.weights[k] : gl.bias[k - layer.weights.size()]);
        const double saved = v;
        v = saved + h;
        const double up = mlp_loss(m, xb, y);
        v = saved - h;
        const double down = mlp_loss(m, xb, y);
        v = saved;
        numeric.push_back((up - down) / (2.0 * h));
      }
    };
    visit(m.hidden1, grad.hidden1);
    visit(m.hidden2, grad.hidden2);
    visit(m.output, grad.output);
    mlp_worst = std::max(mlp_worst, relative_error(analytic, numeric));
    ++mlp_points;
  }
  const bool ok = smooth_points >= 20 && mlp_points >= 20 && smooth_worst < 1e-4 && mlp_worst < 1e-4;
  return {ok, "smoothed objective: " + std::to_string(smooth_points) + " points, worst rel err " +
                  fmt(smooth_worst, 3) + "; mlp: " + std::to_string(mlp_points) +
                  " points, worst rel err " + fmt(mlp_worst, 3)};
}

Outcome metric_properties() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const MetricKind kinds[] = {MetricKind::demographic_parity, MetricKind::equalized_odds,
                              MetricKind::equal_opportunity, MetricKind::predictive_parity};
  std::size_t violations = 0, undefined_raised = 0, undefined_expected = 0;
  auto value = [](MetricKind k, const std::vector<int>& p, const std::vector<int>& y,
                  const std::vector<int>& g) -> std::optional<double> {
    try {
      return group_metric(k, p, std::span<const int>(y), g);
    } catch (const MetricUndefined&) {
      return std::nullopt;
    }
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const double pg = unit(rng), pp = unit(rng), py = unit(rng);
    std::vector<int> p(n), y(n), g(n);
    for (int i = 0; i < n; ++i) {
      g[i] = unit(rng) < pg;
      p[i] = unit(rng) < pp;
      y[i] = unit(rng) < py;
    }
    // Which conditionals are empty, counted directly.
    bool any[2] = {false, false}, pos[2] = {false, false}, neg[2] = {false, false}, ppos[2] = {false, false};
    for (int i = 0; i < n; ++i) {
      any[g[i]] = true;
      (y[i] ? pos : neg)[g[i]] = true;
      if (p[i]) ppos[g[i]] = true;
    }
    const bool defined[4] = {any[0] && any[1], pos[0] && pos[1] && neg[0] && neg[1], pos[0] && pos[1],
                             ppos[0] && ppos[1]};

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> p2(n), y2(n), g2(n), flipped(n);
    for (int i = 0; i < n; ++i) {
      p2[i] = p[perm[i]];
      y2[i] = y[perm[i]];
      g2[i] = g[perm[i]];
      flipped[i] = 1 - g[i];
    }
    for (int k = 0; k < 4; ++k) {
      const auto v = value(kinds[k], p, y, g);
      if (!defined[k]) {
        ++undefined_expected;
        undefined_raised += !v.has_value();
        continue;
      }
      if (!v) {
        ++violations;
        continue;
      }
      if (*v < -1.0 || *v > 1.0) ++violations;
      if (value(kinds[k], p2, y2, g2) != v) ++violations;
      const auto self = fairness_mismatch(kinds[k], p, p, g, std::span<const int>(y), 0.0);
      if (self.mismatch != 0.0) ++violations;
    }
    if (defined[0] && demographic_parity(p, flipped) != -demographic_parity(p, g)) ++violations;
  }
  const bool ok = violations == 0 && undefined_raised == undefined_expected && undefined_expected > 0;
  return {ok, std::to_string(violations) + " violations over 1000 vectors; " +
                  std::to_string(undefined_raised) + "/" + std::to_string(undefined_expected) +
                  " undefined conditionals raised"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + FAIRLIME_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome reproducibility() {
  // Library: lambda2 = 0 reproduces vanilla explanations exactly.
  SyntheticConfig sc;
  const TabularDataset ds = generate_synthetic(sc);
  const FeatureStats stats = feature_stats(ds);
  const BlackBoxModel oracle(OracleModel{});
  LimeConfig lime;
  lime.kernel = KernelConfig::defaults(3, 1000);
  FairObjectiveConfig off;
  off.lambda2 = 0.0;
  std::size_t mismatched = 0;
  for (std::size_t p : strided_points(ds.n_rows(), 50)) {
    const auto row = ds.rows.row(p);
    const Explanation a = lime_explain(oracle, row, stats, lime, p);
    const Explanation b = fair_lime_explain(oracle, row, stats, lime, off, p);
    mismatched += !(a.surrogate == b.surrogate && a.objective.fidelity == b.objective.fidelity &&
                    a.objective.fairness == b.objective.fairness);
  }
  SweepOptions opts;
  opts.n_points = 50;
  const SweepReport r = run_perturbation_sweep(ds, oracle, {100, 500}, off, seed_range(3), opts);
  for (std::size_t c = 0; c < r.counts.size(); ++c) mismatched += !(r.vanilla[c] == r.fair[c]);

  // CLI: every command twice, outputs compared byte for byte.
  const auto dir = std::filesystem::temp_directory_path() /
                   ("fairlime_acceptance_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  auto q = [&](const std::string& name) { return "\"" + (dir / name).string() + "\""; };
  const std::string data = q("d.csv");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth --n 2000 --minority-frac 0.27 --seed 7 --out ", "d.csv"},
      {"train --data " + data + " --group g --label y --epochs 5 --seed 1 --model ", "m.model"},
      {"explain --data " + data + " --model " + q("m.model") + " --row 17 --lambda2 5.0 --perturbations 1000 --out ",
       "exp.json"},
      {"audit --data " + data + " --model " + q("m.model") + " --metric dp --epsilon 0.05 --points 20 --out ",
       "audit.json"},
      {"sweep --data " + data + " --model oracle --counts 100,200 --seeds 2 --points 20 --out ", "sweep.csv"},
      {"boundary --minority-frac 0.27 --seeds 5 --n 2000 --perturbations 1000 --out ", "boundary.json"},
  };
  std::size_t differing = 0, failed = 0;
  for (const auto& [cmd, out] : commands) {
    const int first = run_cli(cmd + q(out));
    const std::string a = slurp(dir / out);
    std::filesystem::rename(dir / out, dir / (out + ".first"));
    const int second = run_cli(cmd + q(out));
    const std::string b = slurp(dir / out);
    failed += first != 0 || second != 0;
    differing += a != b || a.empty();
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return {mismatched == 0 && differing == 0 && failed == 0,
          std::to_string(mismatched) + " lambda2=0 mismatches; " + std::to_string(failed) +
              " failed and " + std::to_string(differing) + " non-identical of " +
              std::to_string(commands.size()) + " CLI commands"};
}

Outcome mlp_accuracy() {
  const TabularDataset ds = fairlime::testing::separable_dataset(3, 2000);
  TrainConfig cfg;
  cfg.epochs = 50;
  const BlackBoxModel model(train_mlp(ds, cfg));
  const double acc = fairlime::testing::training_accuracy(model, ds);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> wide(0.0, 100.0);
  std::size_t out_of_range = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> x = {static_cast<double>(i % 2), wide(rng)};
    const double s = model.score(x);
    out_of_range += !(s >= 0.0 && s <= 1.0);
  }
  return {acc >= 0.95 && out_of_range == 0,
          "training accuracy " + fmt(acc) + "; " + std::to_string(out_of_range) +
              " of 10000 scores outside [0,1]"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"boundary at minority 0.27 sits near the majority boundary", boundary_027},
      {"boundary at minority 0.5 sits near the midpoint", boundary_050},
      {"fair explanations reduce mismatch at every perturbation count", sweep},
      {"fair solver matches the exhaustive grid oracle", grid_oracle},
      {"analytic gradients match finite differences", gradients},
      {"fairness metric properties", metric_properties},
      {"reproducibility and lambda2 = 0 reduction", reproducibility},
      {"MLP black box fits a separable set with bounded scores", mlp_accuracy},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first
              << "; " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
