#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsched/config.hpp"
#include "fedsched/matching.hpp"
#include "fedsched/matrix.hpp"

namespace fedsched {

struct RoundMetrics {
  std::int64_t t = 0;
  double delay_s = 0.0;
  double cum_delay_s = 0.0;
  // Smallest observed reward among the matched clients this round.
  double min_reward = 0.0;
  // NaN when learning is disabled.
  double accuracy = 0.0;
  double loss = 0.0;
  Assignment assignment;
  std::vector<int> indicators;
  // Queue lengths at the start of the round, as used for the decision.
  std::vector<double> queues;
  // Fraction of rounds so far in which the client uploaded successfully.
  std::vector<double> selection_fraction;
  std::vector<double> eps_bar;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<double> thetas;
  std::vector<double> betas;
  std::vector<double> noise_stds;
  // Oracle-stationary mode only.
  std::optional<Matrix> oracle_mu;
  std::vector<RoundMetrics> rounds;
  std::vector<std::string> warnings;

  double MaxQueue() const;
};

// Runs the full training/scheduling loop. Deterministic given the config.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Oracle means with a unique optimum: a random assignment's edges are drawn
// from [0.75, 0.95] and every other edge from [0.05, 0.45], so any other
// assignment has a strictly smaller bottleneck.
Matrix PlantedOracleMeans(std::size_t clients, std::size_t channels, Rng& rng);

struct RegretReport {
  double mu_star = 0.0;
  Assignment a_star;
  double delta_min = 0.0;
  double delta_max = 0.0;
  double q_max = 0.0;
  double precision = 0.0;
  std::vector<double> per_round;
  std::vector<double> cumulative;
  std::optional<double> bound;
};

// Per-round regret mu* - (bottleneck of the chosen assignment under the
// true means), with mu* and a* from exhaustive search.
RegretReport compute_regret(std::span<const RoundMetrics> rounds, const Matrix& mu);

// Delta_max * (4 V^2 N (U+2) ln T / (Delta_min - Q_max - eps)^2 + (2U+1) N),
// or nullopt when Delta_min - Q_max - eps <= 0.
std::optional<double> theorem4_bound(double delta_min, double delta_max, double q_max,
                                     double precision, double V, std::size_t clients,
                                     std::size_t channels, std::int64_t rounds);

// Regret plus the bound for an oracle-stationary run. Throws
// std::invalid_argument for physical runs, whose true means are unknown.
RegretReport RegretFor(const ExperimentResult& result, double precision = 0.0);

// Column order: t, delay_s, cum_delay_s, min_reward, accuracy, loss, then
// q_1..q_U, sel_frac_1..sel_frac_U, eps_bar_1..eps_bar_U.
std::vector<std::string> CsvHeader(std::size_t clients);
void WriteCsv(const ExperimentResult& result, const std::string& path);

nlohmann::json SummaryJson(const ExperimentResult& result,
                           const std::optional<RegretReport>& regret);
void WriteSummaryJson(const ExperimentResult& result, const std::optional<RegretReport>& regret,
                      const std::string& path);

// Writes metrics.csv and summary.json under `dir`, creating it if needed.
void emit(const ExperimentResult& result, const std::optional<RegretReport>& regret,
          const std::string& dir);

}  // namespace fedsched
