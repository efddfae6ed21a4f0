#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fairlime/experiments.hpp"
#include "fairlime/metrics.hpp"
#include "fairlime/surrogate.hpp"

namespace fairlime {

enum class ReportFormat { json, csv, svg_lines };

// json | csv | svg-lines; anything else is a usage error.
ReportFormat parse_report_format(const std::string& name);
// From the file extension: .json, .csv, .svg.
ReportFormat format_for_path(const std::filesystem::path& path);

nlohmann::json to_json(const BoundaryReport& r);
nlohmann::json to_json(const SweepReport& r);
nlohmann::json to_json(const Explanation& e, const std::vector<std::string>& feature_names = {});
nlohmann::json to_json(const MismatchReport& r);
nlohmann::json to_json(const CounterfactualReport& r);
nlohmann::json to_json(const SensitiveImportance& s);

BoundaryReport boundary_report_from_json(const nlohmann::json& j);
SweepReport sweep_report_from_json(const nlohmann::json& j);

/// svg-lines is only defined for sweep reports.
void emit_report(const SweepReport& r, ReportFormat format, const std::filesystem::path& path);
void emit_report(const BoundaryReport& r, ReportFormat format, const std::filesystem::path& path);

/// Line chart of mean psi against perturbation count, one polyline per
/// variant.
std::string sweep_svg(const SweepReport& r);

// Writes with a trailing newline; data_error when the path is not writable.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace fairlime
