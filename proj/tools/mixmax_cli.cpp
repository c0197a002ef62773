// Command-line runner: `run <config.json> [--out DIR] [--workers N]` and
// `verify <suite> [--seed S]`.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mixmax/experiments.hpp"
#include "mixmax/suites.hpp"

namespace {

int run_command(const std::string& config_path, const std::optional<std::string>& out_dir, std::size_t workers) {
  const mixmax::ExperimentConfig config = mixmax::load_config(config_path);
  // --out beats MIXMAX_OUT_DIR, which beats the config's "output".
  std::string dir = config.output;
  if (const char* env = std::getenv("MIXMAX_OUT_DIR"); env && *env) dir = env;
  if (out_dir) dir = *out_dir;

  const mixmax::ExperimentResult result = mixmax::run_experiment(config, workers);
  const mixmax::OutputPaths paths = mixmax::write_outputs(result, dir);

  std::size_t failed = 0;
  for (const auto& row : result.rows) {
    if (!row.ok()) {
      ++failed;
      std::cerr << "trial " << row.trial << " " << row.method << ": " << row.status << "\n";
    }
  }
  std::cout << "wrote " << result.rows.size() << " rows to " << paths.csv.string() << " (" << failed
            << " failed)\nmanifest " << paths.manifest.string() << "\n";
  return 0;
}

int verify_command(const std::string& suite, std::uint64_t seed) {
  const mixmax::SuiteResult result = mixmax::run_suite(suite, seed);
  for (const auto& line : result.lines) std::cout << "  " << line << "\n";
  std::cout << result.name << ": " << (result.passed ? "PASS" : "FAIL") << " (" << result.margin_label << " "
            << result.worst_margin << ")\n";
  return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group mixture weights by MixMax optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config or manifest file");
  run->add_option("config", config_path, "Config (or run manifest) JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Concurrent trials (default: the config's value)")
      ->check(CLI::PositiveNumber);

  std::string suite;
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "Run a verification suite at its default parameters");
  verify->add_option("suite", suite, "gradients | concavity | unbiasedness | oracle")->required();
  verify->add_option("--seed", seed, "Seed for the suite's random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, out_dir, workers);
    return verify_command(suite, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
