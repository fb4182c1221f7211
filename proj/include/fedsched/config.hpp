#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsched/bandit.hpp"
#include "fedsched/privacy.hpp"

namespace fedsched {

enum class EnvironmentMode { kPhysical, kOracleStationary };
enum class DpScheme { kUniform, kNonUniform };
enum class OracleNoise { kBernoulli, kGaussian };

// Everything one simulation run depends on. Together with the seed it fully
// determines the output.
struct ExperimentConfig {
  std::size_t clients = 10;
  std::size_t channels = 4;
  std::int64_t rounds = 2000;
  std::uint64_t seed = 1;
  double d_max = 5.0;

  bandit::Policy policy = bandit::Policy::kMamabOm;
  double V = 1.0;
  double T0 = 100.0;
  double single_ucb_c = 0.1;

  // Desk-scale learner.
  bool learning = true;
  int tau = 5;
  double eta = 0.1;
  double clip = 1.0;
  int batch = 10;
  double lambda_max = 1.0;
  std::size_t num_classes = 4;
  std::size_t feature_dim = 16;
  double class_separation = 2.5;
  double gamma = 0.8;
  std::size_t dataset_size_min = 200;
  std::size_t dataset_size_max = 600;
  std::size_t test_size = 1000;
  std::int64_t eval_every = 1;

  DpScheme dp_scheme = DpScheme::kUniform;
  double epsilon = 25.0;
  double delta = 1e-3;
  // Overrides the divergence-derived participating ratios when set.
  std::optional<double> fixed_beta;

  EnvironmentMode environment = EnvironmentMode::kPhysical;
  double side_m = 2000.0;
  double uplink_bandwidth_hz = 15e3;
  double downlink_bandwidth_hz = 15e3;
  double client_tx_power_dbm = 23.0;
  double bs_tx_power_dbm = 23.0;
  double noise_power_dbm = -107.0;
  // Nakagami-m shape of the per-round power fading; 1 = Rayleigh.
  double fading_shape = 30.0;
  // Mean interference power per (client, channel), drawn once per run
  // log-uniformly (in dBm) from these ranges.
  double interference_up_dbm_lo = -130.0;
  double interference_up_dbm_hi = -94.0;
  double interference_down_dbm_lo = -130.0;
  double interference_down_dbm_hi = -94.0;
  double cycles_per_sample = 2.0;
  // Client i (1-based) draws its CPU frequency uniformly from
  // [lo_step*i + lo_base, hi_step*i + hi_base].
  double cpu_lo_base_hz = 10e3;
  double cpu_lo_step_hz = 10e3;
  double cpu_hi_base_hz = 30e3;
  double cpu_hi_step_hz = 100e3;

  // Oracle-stationary mode: true mean reward per (client, channel). When
  // absent a planted instance with a unique optimum is generated from the seed.
  std::optional<std::vector<std::vector<double>>> oracle_mu;
  OracleNoise oracle_noise = OracleNoise::kGaussian;
  double oracle_noise_std = 0.05;

  void Validate() const;

  // Per-client (epsilon, delta) under the configured scheme. The
  // non-uniform scheme gives client i (1-based) epsilon 5*(floor((i-1)/2)+3).
  std::vector<privacy::PrivacyParams> PrivacyParamsPerClient() const;

  bandit::SchedulerConfig Scheduler() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Parameter set of the reference experiments: 10 clients, 4 channels,
// 15 kHz, 23 dBm, -107 dBm noise, epsilon 25, delta 1e-3, tau 5, T0 100.
ExperimentConfig DefaultPreset();

// Regret-oriented preset: oracle-stationary rewards, no learning, beta = 0.
ExperimentConfig OraclePreset();

nlohmann::json ToJson(const ExperimentConfig& config);

// Missing keys keep their defaults; unknown keys and ill-typed values throw
// ConfigError.
ExperimentConfig ConfigFromJson(const nlohmann::json& doc);

ExperimentConfig LoadConfig(const std::string& path);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string EnvironmentName(EnvironmentMode mode);

}  // namespace fedsched
