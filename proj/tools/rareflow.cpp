// rareflow <subcommand> --config <file> [--seed u64] [--n N] [--threads k] [--out file.{csv,json}] [--oracle]

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <utility>

#include <CLI11.hpp>

#include "rareflow/cli.hpp"
#include "rareflow/mc.hpp"

namespace cli = rareflow::cli;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw rareflow::Error(rareflow::ErrorCode::io, "cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-event simulation experiments"};
  app.set_version_flag("--version", std::string(cli::kVersion));

  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool oracle = false;

  const std::pair<cli::Subcommand, const char*> subs[] = {
      {cli::Subcommand::cramer, "tail of an empirical mean by exponential tilting"},
      {cli::Subcommand::ruin, "ruin probability of the classical risk process"},
      {cli::Subcommand::ruin_invest, "ruin with a constant risky investment"},
      {cli::Subcommand::barrier, "knock-out call with and without the bridge correction"},
      {cli::Subcommand::fw_bond, "up-and-in bond under the large-deviation drift"},
      {cli::Subcommand::ghs, "optimal Gaussian mean shift"},
      {cli::Subcommand::credit, "portfolio loss tail by two-step importance sampling"},
      {cli::Subcommand::longterm, "long-run outperformance probability"}};
  for (const auto& [s, what] : subs) {
    CLI::App* sub = app.add_subcommand(std::string(cli::subcommand_name(s)), what);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--n", n, "override the replication count N")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "output file (.csv or .json); stdout when absent");
    sub->add_flag("--oracle", oracle, "add reference values where an oracle exists");
  }
  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);

  const auto chosen = cli::subcommand_from_name(app.get_subcommands().front()->get_name());
  try {
    cli::ExperimentConfig config = cli::parse_config(read_file(config_path), chosen);
    if (seed) config.seed = *seed;
    if (n) config.replications = *n;
    if (oracle) config.oracle = true;
    if (ends_with(out_path, ".json"))
      config.output = cli::OutputFormat::json;
    else if (ends_with(out_path, ".csv"))
      config.output = cli::OutputFormat::csv;
    else if (!out_path.empty())
      throw rareflow::Error(rareflow::ErrorCode::config, "--out must end in .csv or .json");
    rareflow::set_thread_budget(threads);

    const cli::Report report = cli::run_experiment(config);
    const std::string text = config.output == cli::OutputFormat::json ? cli::to_json(report) : cli::to_csv(report);
    if (out_path.empty())
      std::cout << text;
    else
      cli::write_atomic(out_path, text);
    return 0;
  } catch (const rareflow::Error& e) {
    std::cerr << "rareflow: " << rareflow::error_code_name(e.code()) << ": " << e.what() << "\n";
    return cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rareflow: internal error: " << e.what() << "\n";
    return 70;
  }
}
