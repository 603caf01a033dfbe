#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "pentropy/errors.hpp"

namespace pentropy::cli {

/// Config validation failure; carries the offending field path.
class ConfigError : public Error {
  public:
    ConfigError(std::string field_path, const std::string& what)
        : Error("config error at '" + field_path + "': " + what),
          field_path(std::move(field_path)) {}
    std::string field_path;
};

/// Common command-line options shared by every subcommand.
struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::uint64_t> samples_override;
    std::string out_dir = "pentropy_out";
    std::string format = "json";  ///< stdout format: json | csv
    std::string kernels = "auto"; ///< auto | scalar | avx2
};

/// Exit codes: 0 success, 1 runtime failure, 2 config error.
int run_entropy(const RunOptions& options);
int run_orthogonality(const RunOptions& options);
int run_spectral(const RunOptions& options);
int run_theorem1_demo(const RunOptions& options);

/// FNV-1a 64 hash of the canonical config dump, as fixed-width hex.
std::string config_hash(const nlohmann::ordered_json& config);

/// Loads and parses the config file (ConfigError on I/O or parse failure).
nlohmann::ordered_json load_config(const std::string& path);

}  // namespace pentropy::cli
