// Command-line front end: run, regret, sweep, compare.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedsched/config.hpp"
#include "fedsched/harness.hpp"

namespace {

using fedsched::ExperimentConfig;
using fedsched::ExperimentResult;

constexpr int kUsageError = 2;

struct Job {
  std::string label;
  ExperimentConfig config;
};

std::vector<std::string> SplitCsv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ExperimentConfig BaseConfig(const std::string& path, std::optional<std::uint64_t> seed) {
  ExperimentConfig config = path.empty() ? fedsched::DefaultPreset() : fedsched::LoadConfig(path);
  if (seed) config.seed = *seed;
  return config;
}

// Sets one config key from its textual value, keeping the key's JSON type.
ExperimentConfig WithParam(const ExperimentConfig& base, const std::string& key,
                           const std::string& value) {
  nlohmann::json doc = fedsched::ToJson(base);
  if (!doc.contains(key)) throw fedsched::ConfigError("unknown sweep parameter '" + key + "'");
  nlohmann::json& slot = doc[key];
  try {
    if (slot.is_string()) {
      slot = value;
    } else if (slot.is_boolean()) {
      slot = (value == "true" || value == "1");
    } else if (slot.is_number_unsigned()) {
      slot = std::stoull(value);
    } else if (slot.is_number_integer()) {
      slot = std::stoll(value);
    } else {
      slot = std::stod(value);
    }
  } catch (const std::logic_error&) {
    throw fedsched::ConfigError("cannot parse value '" + value + "' for '" + key + "'");
  }
  return fedsched::ConfigFromJson(doc);
}

void PrintRow(const std::string& label, const ExperimentResult& r) {
  const auto& last = r.rounds.back();
  std::printf("%-24s cum_delay_s=%.6g accuracy=%.4f max_queue=%.4g\n", label.c_str(),
              last.cum_delay_s, last.accuracy, r.MaxQueue());
}

// Runs the jobs concurrently; each run owns its generators, seeded from its
// own config, so outputs do not depend on scheduling.
int RunJobs(const std::vector<Job>& jobs, const std::string& out_dir) {
  std::vector<std::future<ExperimentResult>> futures;
  futures.reserve(jobs.size());
  for (const auto& job : jobs) {
    futures.push_back(std::async(std::launch::async,
                                 [cfg = job.config] { return fedsched::run_experiment(cfg); }));
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const ExperimentResult result = futures[k].get();
    for (const auto& w : result.warnings) std::cerr << "warning: " << jobs[k].label << ": " << w << '\n';
    std::optional<fedsched::RegretReport> regret;
    if (result.oracle_mu) regret = fedsched::RegretFor(result);
    fedsched::emit(result, regret, (std::filesystem::path(out_dir) / jobs[k].label).string());
    PrintRow(jobs[k].label, result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning client scheduling simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run one experiment and write metrics.csv + summary.json");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory")->default_val("out");

  auto* regret = app.add_subcommand("regret", "Run an oracle-stationary experiment and report regret");
  regret->add_option("--config", config_path, "JSON experiment config")->required();
  regret->add_option("--seed", seed, "Override the config seed");
  regret->add_option("--out", out_dir, "Also write metrics.csv + summary.json here");

  std::string param;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a config key");
  sweep->add_option("--config", config_path, "JSON experiment config (default preset if omitted)");
  sweep->add_option("--param", param, "Config key to vary, e.g. V")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--seed", seed, "Override the config seed");
  sweep->add_option("--out", out_dir, "Output directory")->default_val("sweep");

  std::string policies = "mamab-om,mamab-gmba,random,round-robin,single-ucb";
  auto* compare = app.add_subcommand("compare", "Run the same experiment under several policies");
  compare->add_option("--config", config_path, "JSON experiment config (default preset if omitted)");
  compare->add_option("--policies", policies, "Comma-separated policy names")
      ->default_val(policies);
  compare->add_option("--seed", seed, "Override the config seed");
  compare->add_option("--out", out_dir, "Output directory")->default_val("compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (run->parsed()) {
      return RunJobs({{"", BaseConfig(config_path, seed)}}, out_dir);
    }
    if (regret->parsed()) {
      const ExperimentConfig config = BaseConfig(config_path, seed);
      if (config.environment != fedsched::EnvironmentMode::kOracleStationary) {
        std::cerr << "error: regret requires \"environment\": \"oracle-stationary\"\n";
        return kUsageError;
      }
      const ExperimentResult result = fedsched::run_experiment(config);
      const fedsched::RegretReport report = fedsched::RegretFor(result);
      if (!out_dir.empty()) fedsched::emit(result, report, out_dir);
      std::cout << fedsched::SummaryJson(result, report)["regret"].dump(2) << '\n';
      return 0;
    }
    if (sweep->parsed()) {
      const ExperimentConfig base = BaseConfig(config_path, seed);
      std::vector<Job> jobs;
      for (const auto& v : SplitCsv(values)) {
        jobs.push_back({param + "=" + v, WithParam(base, param, v)});
      }
      if (jobs.empty()) throw fedsched::ConfigError("--values lists no values");
      return RunJobs(jobs, out_dir);
    }
    if (compare->parsed()) {
      const ExperimentConfig base = BaseConfig(config_path, seed);
      std::vector<Job> jobs;
      for (const auto& name : SplitCsv(policies)) {
        jobs.push_back({name, WithParam(base, "policy", name)});
      }
      if (jobs.empty()) throw fedsched::ConfigError("--policies lists no policies");
      return RunJobs(jobs, out_dir);
    }
  } catch (const fedsched::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
