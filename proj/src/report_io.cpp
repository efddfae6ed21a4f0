#include "fairlime/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairlime/error.hpp"

namespace fairlime {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

json cell_json(const SweepCell& c) {
  return {{"mean_psi", c.mean_psi}, {"std_psi", c.std_psi}, {"n_seeds", c.n_seeds},
          {"per_seed", c.per_seed}};
}

SweepCell cell_from_json(const json& j) {
  SweepCell c;
  c.mean_psi = j.at("mean_psi").get<double>();
  c.std_psi = j.at("std_psi").get<double>();
  c.n_seeds = j.at("n_seeds").get<std::size_t>();
  c.per_seed = j.at("per_seed").get<std::vector<double>>();
  return c;
}

template <class F>
auto parse_guard(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed ") + what + " report: " + e.what());
  }
}

std::string boundary_csv(const BoundaryReport& r) {
  std::ostringstream out;
  out << "seed,boundary,group0_boundary,group1_boundary\n";
  for (std::size_t i = 0; i < r.per_seed_boundary.size(); ++i)
    out << r.used_seeds[i] << ',' << num(r.per_seed_boundary[i]) << ','
        << num(r.per_seed_group0[i]) << ',' << num(r.per_seed_group1[i]) << '\n';
  return out.str();
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "count,variant,mean_psi,std_psi,n_seeds,explained,skipped\n";
  for (std::size_t c = 0; c < r.counts.size(); ++c) {
    for (int v = 0; v < 2; ++v) {
      const SweepCell& cell = v == 0 ? r.vanilla[c] : r.fair[c];
      out << r.counts[c] << ',' << (v == 0 ? "vanilla" : "fair") << ',' << num(cell.mean_psi)
          << ',' << num(cell.std_psi) << ',' << cell.n_seeds << ',' << r.explained[c] << ','
          << r.skipped[c] << '\n';
    }
  }
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "svg-lines" || name == "svg") return ReportFormat::svg_lines;
  throw usage_error("unknown report format '" + name + "' (expected json, csv or svg-lines)");
}

ReportFormat format_for_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".json") return ReportFormat::json;
  if (ext == ".csv") return ReportFormat::csv;
  if (ext == ".svg") return ReportFormat::svg_lines;
  throw usage_error("cannot infer report format from '" + path.string() +
                    "'; use a .json, .csv or .svg extension or pass --format");
}

json to_json(const BoundaryReport& r) {
  const SyntheticConfig& s = r.scenario;
  return {
      {"scenario",
       {{"n_rows", s.n_rows},
        {"minority_fraction", s.minority_fraction},
        {"boundary_majority", s.boundary_majority},
        {"boundary_minority", s.boundary_minority},
        {"x0_group_shift", s.x0_group_shift},
        {"noise_std", s.noise_std},
        {"seed", s.seed}}},
      {"kernel", {{"width", r.kernel.width}, {"n_samples", r.kernel.n_samples}}},
      {"seeds", r.seeds},
      {"used_seeds", r.used_seeds},
      {"per_seed_boundary", r.per_seed_boundary},
      {"per_seed_group0", r.per_seed_group0},
      {"per_seed_group1", r.per_seed_group1},
      {"mean_boundary", r.mean_boundary},
      {"std_boundary", r.std_boundary},
      {"mean_group0", r.mean_group0},
      {"mean_group1", r.mean_group1},
      {"majority_boundary", r.majority_boundary},
      {"minority_boundary", r.minority_boundary},
      {"midpoint", r.midpoint},
      {"closer_to_majority", r.closer_to_majority},
      {"degenerate_count", r.degenerate_count},
      {"explanations", r.explanations},
  };
}

BoundaryReport boundary_report_from_json(const json& j) {
  return parse_guard("boundary", [&] {
    BoundaryReport r;
    const json& s = j.at("scenario");
    r.scenario.n_rows = s.at("n_rows").get<std::size_t>();
    r.scenario.minority_fraction = s.at("minority_fraction").get<double>();
    r.scenario.boundary_majority = s.at("boundary_majority").get<double>();
    r.scenario.boundary_minority = s.at("boundary_minority").get<double>();
    r.scenario.x0_group_shift = s.at("x0_group_shift").get<double>();
    r.scenario.noise_std = s.at("noise_std").get<double>();
    r.scenario.seed = s.at("seed").get<std::uint64_t>();
    r.kernel.width = j.at("kernel").at("width").get<double>();
    r.kernel.n_samples = j.at("kernel").at("n_samples").get<std::size_t>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.used_seeds = j.at("used_seeds").get<std::vector<std::uint64_t>>();
    r.per_seed_boundary = j.at("per_seed_boundary").get<std::vector<double>>();
    r.per_seed_group0 = j.at("per_seed_group0").get<std::vector<double>>();
    r.per_seed_group1 = j.at("per_seed_group1").get<std::vector<double>>();
    r.mean_boundary = j.at("mean_boundary").get<double>();
    r.std_boundary = j.at("std_boundary").get<double>();
    r.mean_group0 = j.at("mean_group0").get<double>();
    r.mean_group1 = j.at("mean_group1").get<double>();
    r.majority_boundary = j.at("majority_boundary").get<double>();
    r.minority_boundary = j.at("minority_boundary").get<double>();
    r.midpoint = j.at("midpoint").get<double>();
    r.closer_to_majority = j.at("closer_to_majority").get<bool>();
    r.degenerate_count = j.at("degenerate_count").get<std::size_t>();
    r.explanations = j.at("explanations").get<std::size_t>();
    return r;
  });
}

json to_json(const SweepReport& r) {
  json cells = json::array();
  for (std::size_t c = 0; c < r.counts.size(); ++c)
    cells.push_back({{"count", r.counts[c]},
                     {"vanilla", cell_json(r.vanilla[c])},
                     {"fair", cell_json(r.fair[c])},
                     {"explained", r.explained[c]},
                     {"skipped", r.skipped[c]}});
  return {{"counts", r.counts}, {"seeds", r.seeds},       {"lambda2", r.lambda2},
          {"tau", r.tau},       {"n_points", r.n_points}, {"cells", cells}};
}

SweepReport sweep_report_from_json(const json& j) {
  return parse_guard("sweep", [&] {
    SweepReport r;
    r.counts = j.at("counts").get<std::vector<std::size_t>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.lambda2 = j.at("lambda2").get<double>();
    r.tau = j.at("tau").get<double>();
    r.n_points = j.at("n_points").get<std::size_t>();
    const json& cells = j.at("cells");
    if (cells.size() != r.counts.size())
      throw data_error("malformed sweep report: cell count does not match counts");
    for (const json& c : cells) {
      r.vanilla.push_back(cell_from_json(c.at("vanilla")));
      r.fair.push_back(cell_from_json(c.at("fair")));
      r.explained.push_back(c.at("explained").get<std::size_t>());
      r.skipped.push_back(c.at("skipped").get<std::size_t>());
    }
    return r;
  });
}

json to_json(const Explanation& e, const std::vector<std::string>& feature_names) {
  json weights = json::array();
  for (std::size_t j = 0; j < e.surrogate.weights.size(); ++j) {
    json w = {{"index", j}, {"weight", e.surrogate.weights[j]}};
    if (j < feature_names.size()) w["feature"] = feature_names[j];
    weights.push_back(w);
  }
  json out = {
      {"weights", weights},
      {"intercept", e.surrogate.intercept},
      {"active_set", e.surrogate.active_set},
      {"center", e.center},
      {"lambda1", e.lambda1},
      {"lambda2", e.lambda2},
      {"tau", e.tau},
      {"n_perturbations", e.n_perturbations},
      {"seed", e.seed},
      {"restart_count", e.restart_count},
      {"objective",
       {{"fidelity", e.objective.fidelity},
        {"complexity", e.objective.complexity},
        {"fairness", e.objective.fairness ? json(*e.objective.fairness) : json(nullptr)}}},
  };
  out["psi_hard"] = e.objective.fairness ? json(*e.objective.fairness) : json(nullptr);
  out["psi_smooth"] = e.psi_smooth ? json(*e.psi_smooth) : json(nullptr);
  return out;
}

json to_json(const MismatchReport& r) {
  return {{"metric", to_string(r.metric)}, {"m_blackbox", r.m_blackbox},
          {"m_surrogate", r.m_surrogate},  {"mismatch", r.mismatch},
          {"epsilon", r.epsilon},          {"preserved", r.preserved}};
}

json to_json(const CounterfactualReport& r) {
  return {{"f_delta", r.f_delta},
          {"e_delta", r.e_delta},
          {"discrepancy", r.discrepancy},
          {"tolerance", r.tolerance ? json(*r.tolerance) : json(nullptr)},
          {"preserved", r.preserved ? json(*r.preserved) : json(nullptr)}};
}

json to_json(const SensitiveImportance& s) {
  return {{"weight", s.weight}, {"in_active_set", s.in_active_set}, {"notes", s.notes}};
}

std::string sweep_svg(const SweepReport& r) {
  constexpr double width = 640, height = 400, left = 70, right = 20, top = 30, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double y_max = 0.0;
  for (std::size_t c = 0; c < r.counts.size(); ++c)
    y_max = std::max({y_max, r.vanilla[c].mean_psi, r.fair[c].mean_psi});
  if (!(y_max > 0.0)) y_max = 1.0;
  y_max *= 1.1;
  const double x_lo = r.counts.empty() ? 0.0 : static_cast<double>(r.counts.front());
  double x_hi = r.counts.empty() ? 1.0 : static_cast<double>(r.counts.back());
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  auto px = [&](double x) { return left + plot_w * (x - x_lo) / (x_hi - x_lo); };
  auto py = [&](double y) { return top + plot_h * (1.0 - y / y_max); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  for (std::size_t c = 0; c < r.counts.size(); ++c) {
    const double x = px(static_cast<double>(r.counts[c]));
    out << "  <text x=\"" << fixed(x, 2) << "\" y=\"" << top + plot_h + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << r.counts[c] << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = y_max * t / 4.0;
    out << "  <text x=\"" << left - 6 << "\" y=\"" << fixed(py(v) + 4, 2)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fixed(v, 3) << "</text>\n";
  }
  out << "  <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">number of perturbations</text>\n";
  out << "  <text x=\"18\" y=\"" << top + plot_h / 2 << "\" font-size=\"13\" "
      << "text-anchor=\"middle\" transform=\"rotate(-90 18 " << top + plot_h / 2
      << ")\">mean fairness mismatch (hard psi)</text>\n";

  const char* colors[2] = {"#d62728", "#1f77b4"};
  const char* names[2] = {"vanilla", "fair"};
  for (int v = 0; v < 2; ++v) {
    out << "  <polyline fill=\"none\" stroke=\"" << colors[v] << "\" stroke-width=\"2\" "
        << "data-variant=\"" << names[v] << "\" points=\"";
    for (std::size_t c = 0; c < r.counts.size(); ++c) {
      const SweepCell& cell = v == 0 ? r.vanilla[c] : r.fair[c];
      if (c) out << ' ';
      out << fixed(px(static_cast<double>(r.counts[c])), 2) << ','
          << fixed(py(cell.mean_psi), 2);
    }
    out << "\"/>\n";
    out << "  <text x=\"" << left + plot_w - 80 << "\" y=\"" << top + 15 + 16 * v
        << "\" font-size=\"12\" fill=\"" << colors[v] << "\">" << names[v] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  out.flush();
  if (!out) throw data_error("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2)); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw data_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void emit_report(const SweepReport& r, ReportFormat format, const std::filesystem::path& path) {
  switch (format) {
    case ReportFormat::json:
      return write_json(path, to_json(r));
    case ReportFormat::csv:
      return write_text(path, sweep_csv(r));
    case ReportFormat::svg_lines:
      return write_text(path, sweep_svg(r));
  }
  throw usage_error("unknown report format");
}

void emit_report(const BoundaryReport& r, ReportFormat format, const std::filesystem::path& path) {
  switch (format) {
    case ReportFormat::json:
      return write_json(path, to_json(r));
    case ReportFormat::csv:
      return write_text(path, boundary_csv(r));
    case ReportFormat::svg_lines:
      throw usage_error("svg-lines is only available for sweep reports");
  }
  throw usage_error("unknown report format");
}

}  // namespace fairlime
