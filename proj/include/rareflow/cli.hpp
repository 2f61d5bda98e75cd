#pragma once
// Config-driven experiment runner behind the `rareflow` tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rareflow/error.hpp"

namespace rareflow::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Subcommand { cramer, ruin, ruin_invest, barrier, fw_bond, ghs, credit, longterm };
enum class OutputFormat { csv, json };

std::string_view subcommand_name(Subcommand s) noexcept;
std::optional<Subcommand> subcommand_from_name(std::string_view name) noexcept;

/// A validated experiment. Model parameters live in `params` with every default filled in, so
/// two configs compare equal exactly when they describe the same run.
struct ExperimentConfig {
  Subcommand subcommand = Subcommand::cramer;
  std::size_t replications = 0;  // key "N"
  std::uint64_t seed = 1;
  std::vector<double> ladder;    // empty for subcommands without a ladder
  OutputFormat output = OutputFormat::csv;
  bool oracle = false;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const ExperimentConfig& o) const {
    return subcommand == o.subcommand && replications == o.replications && seed == o.seed && ladder == o.ladder &&
           output == o.output && oracle == o.oracle && params == o.params;
  }
};

struct Diagnostic {
  std::string field;  // empty for document-level problems
  std::size_t line = 0;  // 1-based, 0 when unknown
  std::string message;
};

/// Carries every problem found in a config document. code() is ErrorCode::parse for malformed
/// documents and ErrorCode::config for documents that parse but fail validation.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses and validates a JSON config. When the document has no "subcommand" key, `expected`
/// supplies it; when both are present they must agree.
ExperimentConfig parse_config(std::string_view text, std::optional<Subcommand> expected = std::nullopt);

/// Canonical JSON text of the config; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
};

/// Column layout shared by every subcommand.
const std::vector<std::string>& report_columns();

/// Runs the experiment. Metadata carries seed, wall time, version and config hash; rows depend
/// only on the config.
Report run_experiment(const ExperimentConfig& config);

/// %.17g for finite values, "inf" / "-inf" / "na" otherwise.
std::string format_number(double v);
std::string format_cell(const Cell& c);

/// Metadata as '# key=value' lines, then the header and data rows, LF line endings.
std::string to_csv(const Report& report);
std::string to_json(const Report& report);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Process exit code for an error category.
int exit_code(ErrorCode code) noexcept;

}  // namespace rareflow::cli
