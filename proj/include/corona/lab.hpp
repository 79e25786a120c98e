#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corona/spaces.hpp"

namespace corona {

inline constexpr int kSchemaVersion = 1;

/// Malformed or unknown configuration. Maps to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

struct LabResult {
  int exit_code = 0;  // 0 all checks pass, 1 some check failed
  Json summary = Json::object();
  std::map<std::string, Table> tables;  // file stem -> table
  std::vector<std::string> failures;
};

std::vector<std::string> lab_subcommands();

/// FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

/// Runs one experiment. Throws ConfigError on schema violations; library
/// errors propagate.
LabResult run_experiment(const std::string& subcommand, const Json& config);

/// summary.json plus one CSV per table. Every file carries the schema version
/// and the config hash.
void write_outputs(const LabResult& result, const std::string& subcommand, const Json& config,
                   const std::filesystem::path& out_dir);

std::string format_cell(const Json& v);
std::string table_csv(const Table& t, const std::string& header_comment);

}  // namespace corona
