#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsched/matching.hpp"
#include "fedsched/matrix.hpp"
#include "fedsched/rng.hpp"

namespace fedsched::bandit {

enum class Policy { kMamabOm, kMamabGmba, kRandom, kRoundRobin, kSingleUcb };

std::string PolicyName(Policy policy);
// Accepts the names produced by PolicyName; throws std::invalid_argument otherwise.
Policy ParsePolicy(const std::string& name);

struct SchedulerConfig {
  double V = 1.0;
  double T0 = 100.0;
  Policy policy = Policy::kMamabOm;
  double single_ucb_c = 0.1;

  void Validate() const;
};

// max(1 - delay / d_max, 0).
double reward(double delay_s, double d_max_s);

class BanditState {
 public:
  BanditState(std::size_t clients, std::size_t channels);

  std::size_t clients() const { return plays_.rows(); }
  std::size_t channels() const { return plays_.cols(); }
  std::int64_t round() const { return round_; }
  void set_round(std::int64_t t) { round_ = t; }

  // Q_i <- max(Q_i + beta_i - indicator_i, 0).
  void update_queues(std::span<const double> betas, std::span<const int> indicators);

  // Records one reward per matched (client, channel); throws
  // std::invalid_argument for a reward outside [0, 1].
  // rewards is indexed by client; unmatched entries are ignored.
  void observe(const Assignment& assignment, std::span<const double> rewards);

  // e_{i,j} = Q_i + V*mean + V*sqrt((U+2) ln(s_i) / n_{i,j}); kUnexplored where n = 0.
  RewardMatrix estimated_rewards(double V) const;

  double plays(std::size_t i, std::size_t j) const { return plays_(i, j); }
  double reward_sum(std::size_t i, std::size_t j) const { return sums_(i, j); }
  double mean(std::size_t i, std::size_t j) const;
  double client_plays(std::size_t i) const;
  double client_reward_sum(std::size_t i) const;
  double queue(std::size_t i) const { return queues_.at(i); }
  const std::vector<double>& queues() const { return queues_; }

 private:
  Matrix plays_;
  Matrix sums_;
  std::vector<double> queues_;
  std::int64_t round_ = 0;
};

// Probability of taking the random-exploration branch at round t: exp(-t/T0).
double ExplorationProbability(std::int64_t t, double T0);

// One MAMAB decision. With probability exp(-t/T0) returns a uniform random
// assignment; otherwise solves the max-min matching on the estimated rewards
// with OM or GMBA. `previous` feeds GMBA's better-alternative comparison.
Assignment select_assignment(const BanditState& state, const SchedulerConfig& config,
                             const std::optional<Assignment>& previous, Rng& rng);

Assignment baseline_random(std::size_t clients, std::size_t channels, Rng& rng);

// Clients split into ceil(U/N) consecutive groups; group t mod ceil(U/N)
// gets the channels in index order. The last group wraps to the front.
Assignment baseline_round_robin(std::int64_t t, std::size_t clients, std::size_t channels);

// Channel-agnostic UCB over each client's pooled rewards; the N best indices
// win and get a random bijection onto the channels.
Assignment baseline_single_ucb(const BanditState& state, double c, Rng& rng);

// Stateful wrapper dispatching on the configured policy and remembering the
// last assignment for GMBA.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config);

  Assignment Next(const BanditState& state, Rng& rng);
  const SchedulerConfig& config() const { return config_; }

 private:
  SchedulerConfig config_;
  std::optional<Assignment> previous_;
};

}  // namespace fedsched::bandit
