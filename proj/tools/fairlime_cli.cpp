#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fairlime/blackbox.hpp"
#include "fairlime/dataset.hpp"
#include "fairlime/error.hpp"
#include "fairlime/experiments.hpp"
#include "fairlime/fair_objective.hpp"
#include "fairlime/metrics.hpp"
#include "fairlime/report_io.hpp"
#include "fairlime/seed.hpp"

using namespace fairlime;
using nlohmann::json;

namespace {

struct DataArgs {
  std::string path;
  std::string group = "g";
  std::string label = "y";
  bool no_label = false;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.path, "input CSV")->required();
  cmd->add_option("--group", d.group, "sensitive attribute column")->capture_default_str();
  cmd->add_option("--label", d.label, "label column (ignored when absent)")->capture_default_str();
  cmd->add_flag("--no-label", d.no_label, "treat every column as a feature");
}

bool csv_has_column(const std::string& path, const std::string& name) {
  std::FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw data_error("cannot open '" + path + "'");
  std::string header;
  for (int c = std::fgetc(f); c != EOF && c != '\n'; c = std::fgetc(f)) header.push_back(static_cast<char>(c));
  std::fclose(f);
  std::size_t start = 0;
  while (start <= header.size()) {
    std::size_t end = header.find(',', start);
    if (end == std::string::npos) end = header.size();
    std::string cell = header.substr(start, end - start);
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    if (cell == name) return true;
    start = end + 1;
  }
  return false;
}

TabularDataset load_data(const DataArgs& d) {
  std::optional<std::string> label;
  if (!d.no_label && csv_has_column(d.path, d.label)) label = d.label;
  TabularDataset ds = load_csv(d.path, d.group, label);
  ds.validate();
  return ds;
}

// "oracle" selects the built-in group-threshold rule on column x1.
BlackBoxModel resolve_model(const std::string& spec, const TabularDataset& ds) {
  if (spec == "oracle") {
    OracleModel m;
    m.n_features = ds.n_features();
    m.group_col = ds.group_col;
    m.feature_col = ds.feature_index("x1");
    return BlackBoxModel(m);
  }
  BlackBoxModel model = load_model(spec);
  if (model.n_features() != ds.n_features())
    throw data_error("model expects " + std::to_string(model.n_features()) +
                     " features, data has " + std::to_string(ds.n_features()));
  return model;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string cell = text.substr(start, end - start);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw usage_error("bad count '" + cell + "' in --counts");
    out.push_back(static_cast<std::size_t>(v));
    start = end + 1;
  }
  return out;
}

std::vector<std::uint64_t> seed_list(std::size_t n, std::uint64_t base) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = base + i;
  return seeds;
}

struct FairArgs {
  double lambda1 = 0.0;
  double lambda2 = 5.0;
  double tau = 0.05;
  std::size_t restarts = 4;
  std::size_t steps = 200;
};

void add_fair_options(CLI::App* cmd, FairArgs& a) {
  cmd->add_option("--lambda1", a.lambda1, "complexity weight")->capture_default_str();
  cmd->add_option("--lambda2", a.lambda2, "fairness penalty weight")->capture_default_str();
  cmd->add_option("--tau", a.tau, "sigmoid temperature of the relaxed penalty")
      ->capture_default_str();
  cmd->add_option("--restarts", a.restarts, "optimizer restarts")->capture_default_str();
  cmd->add_option("--steps", a.steps, "gradient steps per annealing stage")->capture_default_str();
}

FairObjectiveConfig fair_config(const FairArgs& a, std::uint64_t seed) {
  FairObjectiveConfig cfg;
  cfg.lambda1 = a.lambda1;
  cfg.lambda2 = a.lambda2;
  cfg.tau = a.tau;
  cfg.restarts = a.restarts;
  cfg.steps = a.steps;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairlime: fairness-preserving local surrogate explanations"};
  app.require_subcommand(1);

  // synth
  SyntheticConfig synth;
  std::string synth_out;
  auto* cmd_synth = app.add_subcommand("synth", "generate the two-group boundary dataset");
  cmd_synth->add_option("--out", synth_out, "output CSV")->required();
  cmd_synth->add_option("--n", synth.n_rows, "rows")->capture_default_str();
  cmd_synth->add_option("--minority-frac", synth.minority_fraction, "share of group 0")
      ->capture_default_str();
  cmd_synth->add_option("--noise", synth.noise_std, "std of the x1 jitter")->capture_default_str();
  cmd_synth->add_option("--seed", synth.seed)->capture_default_str();

  // train
  DataArgs train_data;
  TrainConfig train_cfg;
  std::string train_out;
  auto* cmd_train = app.add_subcommand("train", "train the 3-layer MLP black box");
  add_data_options(cmd_train, train_data);
  cmd_train->add_option("--model", train_out, "output model file")->required();
  cmd_train->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  cmd_train->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
  cmd_train->add_option("--batch", train_cfg.batch_size)->capture_default_str();
  cmd_train->add_option("--seed", train_cfg.seed)->capture_default_str();

  // explain
  DataArgs explain_data;
  FairArgs explain_fair;
  explain_fair.lambda2 = 0.0;
  std::string explain_model, explain_out;
  std::size_t explain_row = 0, explain_perturb = 5000, explain_k = 5;
  std::uint64_t explain_seed = 0;
  bool explain_freeze = false;
  auto* cmd_explain = app.add_subcommand("explain", "explain one row (0-based)");
  add_data_options(cmd_explain, explain_data);
  cmd_explain->add_option("--model", explain_model, "model file or 'oracle'")->required();
  cmd_explain->add_option("--row", explain_row)->required();
  cmd_explain->add_option("--perturbations", explain_perturb)->capture_default_str();
  cmd_explain->add_option("--max-features", explain_k)->capture_default_str();
  cmd_explain->add_option("--seed", explain_seed)->capture_default_str();
  cmd_explain->add_flag("--freeze-group", explain_freeze, "keep the group fixed when sampling");
  cmd_explain->add_option("--out", explain_out, "output JSON")->required();
  add_fair_options(cmd_explain, explain_fair);

  // audit
  DataArgs audit_data;
  FairArgs audit_fair;
  audit_fair.lambda2 = 0.0;
  std::string audit_model, audit_out, audit_metric = "dp";
  double audit_eps = 0.05;
  std::optional<double> audit_cf_tol;
  std::size_t audit_points = 50, audit_perturb = 1000, audit_k = 5;
  std::uint64_t audit_seed = 0;
  auto* cmd_audit = app.add_subcommand("audit", "fairness-mismatch audit of explanations");
  add_data_options(cmd_audit, audit_data);
  cmd_audit->add_option("--model", audit_model, "model file or 'oracle'")->required();
  cmd_audit->add_option("--metric", audit_metric, "dp | eo | eopp | pp")->capture_default_str();
  cmd_audit->add_option("--epsilon", audit_eps)->capture_default_str();
  cmd_audit->add_option("--cf-tolerance", audit_cf_tol, "counterfactual tolerance");
  cmd_audit->add_option("--points", audit_points, "rows audited (strided, 0 = all)")
      ->capture_default_str();
  cmd_audit->add_option("--perturbations", audit_perturb)->capture_default_str();
  cmd_audit->add_option("--max-features", audit_k)->capture_default_str();
  cmd_audit->add_option("--seed", audit_seed)->capture_default_str();
  cmd_audit->add_option("--out", audit_out, "output JSON")->required();
  add_fair_options(cmd_audit, audit_fair);

  // sweep
  DataArgs sweep_data;
  FairArgs sweep_fair;
  std::string sweep_model, sweep_out, sweep_counts = "100,200,500,1000,2000", sweep_format;
  std::size_t sweep_seeds = 20;
  std::uint64_t sweep_seed = 0;
  SweepOptions sweep_opts;
  auto* cmd_sweep = app.add_subcommand("sweep", "perturbation-count sweep, vanilla vs fair");
  add_data_options(cmd_sweep, sweep_data);
  cmd_sweep->add_option("--model", sweep_model, "model file or 'oracle'")->required();
  cmd_sweep->add_option("--counts", sweep_counts)->capture_default_str();
  cmd_sweep->add_option("--seeds", sweep_seeds, "number of seeds")->capture_default_str();
  cmd_sweep->add_option("--seed", sweep_seed, "first seed")->capture_default_str();
  cmd_sweep->add_option("--points", sweep_opts.n_points, "rows explained (strided, 0 = all)")
      ->capture_default_str();
  cmd_sweep->add_option("--max-features", sweep_opts.max_features)->capture_default_str();
  cmd_sweep->add_option("--format", sweep_format, "json | csv | svg-lines (default: extension)");
  cmd_sweep->add_option("--out", sweep_out)->required();
  add_fair_options(cmd_sweep, sweep_fair);

  // boundary
  SyntheticConfig boundary_cfg;
  std::size_t boundary_seeds = 20, boundary_perturb = 5000;
  std::uint64_t boundary_seed = 0;
  std::string boundary_out, boundary_format;
  auto* cmd_boundary = app.add_subcommand("boundary", "implied-boundary study on synthetic data");
  cmd_boundary->add_option("--minority-frac", boundary_cfg.minority_fraction)
      ->capture_default_str();
  cmd_boundary->add_option("--n", boundary_cfg.n_rows)->capture_default_str();
  cmd_boundary->add_option("--majority-boundary", boundary_cfg.boundary_majority)
      ->capture_default_str();
  cmd_boundary->add_option("--minority-boundary", boundary_cfg.boundary_minority)
      ->capture_default_str();
  cmd_boundary->add_option("--seeds", boundary_seeds, "number of seeds")->capture_default_str();
  cmd_boundary->add_option("--seed", boundary_seed, "first seed")->capture_default_str();
  cmd_boundary->add_option("--perturbations", boundary_perturb)->capture_default_str();
  cmd_boundary->add_option("--format", boundary_format, "json | csv (default: extension)");
  cmd_boundary->add_option("--out", boundary_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*cmd_synth) {
      write_csv(generate_synthetic(synth), synth_out);
    } else if (*cmd_train) {
      TabularDataset ds = load_data(train_data);
      if (!ds.labels) throw data_error("training needs a label column ('" + train_data.label + "')");
      save_model(BlackBoxModel(train_mlp(ds, train_cfg)), train_out);
    } else if (*cmd_explain) {
      TabularDataset ds = load_data(explain_data);
      if (explain_row >= ds.n_rows())
        throw usage_error("--row " + std::to_string(explain_row) + " out of range (" +
                          std::to_string(ds.n_rows()) + " rows)");
      const BlackBoxModel model = resolve_model(explain_model, ds);
      const FeatureStats stats = feature_stats(ds);
      LimeConfig lime;
      lime.kernel = KernelConfig::defaults(ds.n_features(), explain_perturb);
      lime.max_features = explain_k;
      lime.group_col = ds.group_col;
      lime.freeze_group = explain_freeze;
      const auto x = ds.rows.row(explain_row);
      const Explanation e = fair_lime_explain(model, x, stats, lime,
                                              fair_config(explain_fair, explain_seed), explain_seed);
      json out = to_json(e, ds.feature_names);
      out["row"] = explain_row;
      out["blackbox_score"] = model.score(x);
      out["sensitive_importance"] = to_json(sensitive_importance(e, ds.group_col));
      write_json(explain_out, out);
    } else if (*cmd_audit) {
      TabularDataset ds = load_data(audit_data);
      const MetricKind metric = parse_metric_kind(audit_metric);
      if (needs_labels(metric) && !ds.labels)
        throw usage_error("metric " + to_string(metric) + " needs a label column");
      const BlackBoxModel model = resolve_model(audit_model, ds);
      const FeatureStats stats = feature_stats(ds);
      LimeConfig lime;
      lime.kernel = KernelConfig::defaults(ds.n_features(), audit_perturb);
      lime.max_features = audit_k;
      lime.group_col = ds.group_col;
      const FairObjectiveConfig cfg = fair_config(audit_fair, audit_seed);
      const std::vector<std::size_t> points = strided_points(ds.n_rows(), audit_points);

      json instances = json::array();
      std::vector<int> f_at_point, e_at_point, groups, labels;
      double local_sum = 0.0;
      std::size_t local_n = 0, local_preserved = 0, local_undefined = 0;
      for (std::size_t p : points) {
        const auto x = ds.rows.row(p);
        const std::uint64_t seed = derive_seed(audit_seed, {p});
        const Explanation e = fair_lime_explain(model, x, stats, lime, cfg, seed);
        json inst = {{"row", p}, {"explanation", to_json(e, ds.feature_names)}};
        // Local audit: demographic parity on the explanation's own neighborhood.
        const Neighborhood nb = sample_neighborhood(x, stats, model, lime.kernel,
                                                    e.seed, lime.sampling());
        std::vector<int> e_preds(nb.size());
        for (std::size_t i = 0; i < nb.size(); ++i)
          e_preds[i] = surrogate_predict(e.surrogate, nb.samples.row(i));
        try {
          const MismatchReport local = fairness_mismatch(
              MetricKind::demographic_parity, nb.f_preds, e_preds, nb.groups, std::nullopt, audit_eps);
          inst["local_mismatch"] = to_json(local);
          local_sum += local.mismatch;
          ++local_n;
          local_preserved += local.preserved;
        } catch (const MetricUndefined& u) {
          inst["local_mismatch"] = {{"undefined", u.what()}};
          ++local_undefined;
        }
        inst["counterfactual"] =
            to_json(counterfactual_check(model, e, x, ds.group_col, audit_cf_tol));
        inst["sensitive_importance"] = to_json(sensitive_importance(e, ds.group_col));
        instances.push_back(inst);
        f_at_point.push_back(model.predict(x));
        e_at_point.push_back(surrogate_predict(e.surrogate, x));
        groups.push_back(static_cast<int>(x[ds.group_col]));
        if (ds.labels) labels.push_back((*ds.labels)[p]);
      }
      std::optional<std::span<const int>> label_span;
      if (ds.labels) label_span = std::span<const int>(labels);
      const MismatchReport global =
          fairness_mismatch(metric, f_at_point, e_at_point, groups, label_span, audit_eps);
      json summary = {
          {"metric", to_string(metric)},
          {"epsilon", audit_eps},
          {"audited_points", points.size()},
          {"global_mismatch", to_json(global)},
          {"local_dp_mean_mismatch", local_n ? json(local_sum / static_cast<double>(local_n))
                                             : json(nullptr)},
          {"local_dp_preserved", local_preserved},
          {"local_dp_undefined", local_undefined},
      };
      write_json(audit_out, json{{"instances", instances}, {"summary", summary}});
    } else if (*cmd_sweep) {
      TabularDataset ds = load_data(sweep_data);
      const BlackBoxModel model = resolve_model(sweep_model, ds);
      const ReportFormat format =
          sweep_format.empty() ? format_for_path(sweep_out) : parse_report_format(sweep_format);
      const SweepReport r =
          run_perturbation_sweep(ds, model, parse_counts(sweep_counts),
                                 fair_config(sweep_fair, sweep_seed),
                                 seed_list(sweep_seeds, sweep_seed), sweep_opts);
      emit_report(r, format, sweep_out);
    } else if (*cmd_boundary) {
      const ReportFormat format = boundary_format.empty() ? format_for_path(boundary_out)
                                                          : parse_report_format(boundary_format);
      const BoundaryReport r = run_boundary_experiment(
          boundary_cfg, KernelConfig::defaults(3, boundary_perturb),
          seed_list(boundary_seeds, boundary_seed));
      emit_report(r, format, boundary_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
