#pragma once

#include "biot/analysis.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace biot {

/// Flat key = value configuration. Blank lines and '#' comments are
/// skipped; duplicate keys are a ConfigError.
using FlatConfig = std::map<std::string, std::string>;
FlatConfig parse_flat_config(std::istream& in);
FlatConfig read_flat_config(const std::filesystem::path& path);

/// 17 significant digits, so binary64 values round-trip.
std::string fmt17(double x);

double parse_double(const std::string& s, const std::string& what);
int parse_int(const std::string& s, const std::string& what);
std::vector<double> parse_double_list(const std::string& s, const std::string& what);
std::vector<int> parse_int_list(const std::string& s, const std::string& what);

/// Writes header and rows; fields are written verbatim.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_infsup_csv(const std::filesystem::path& path, const std::vector<InfSupRow>& rows);
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table);
void write_minres_csv(const std::filesystem::path& path, const std::vector<MinresRow>& rows);
void write_residual_history_csv(const std::filesystem::path& path, const SolveReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

} // namespace biot
