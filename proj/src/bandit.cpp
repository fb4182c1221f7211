#include "fedsched/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedsched::bandit {

std::string PolicyName(Policy policy) {
  switch (policy) {
    case Policy::kMamabOm: return "mamab-om";
    case Policy::kMamabGmba: return "mamab-gmba";
    case Policy::kRandom: return "random";
    case Policy::kRoundRobin: return "round-robin";
    case Policy::kSingleUcb: return "single-ucb";
  }
  return "unknown";
}

Policy ParsePolicy(const std::string& name) {
  for (Policy p : {Policy::kMamabOm, Policy::kMamabGmba, Policy::kRandom, Policy::kRoundRobin,
                   Policy::kSingleUcb}) {
    if (PolicyName(p) == name) return p;
  }
  throw std::invalid_argument("unknown policy '" + name + "'");
}

void SchedulerConfig::Validate() const {
  if (!(V >= 0.0)) throw std::invalid_argument("scheduler: V must be >= 0");
  if (!(T0 > 0.0)) throw std::invalid_argument("scheduler: T0 must be > 0");
  if (!(single_ucb_c >= 0.0)) throw std::invalid_argument("scheduler: single-ucb c must be >= 0");
}

double reward(double delay_s, double d_max_s) {
  if (!(d_max_s > 0.0)) throw std::invalid_argument("reward: d_max must be positive");
  return std::max(1.0 - delay_s / d_max_s, 0.0);
}

BanditState::BanditState(std::size_t clients, std::size_t channels)
    : plays_(clients, channels), sums_(clients, channels), queues_(clients, 0.0) {
  if (channels == 0 || clients < channels) {
    throw std::invalid_argument("BanditState: need clients >= channels >= 1");
  }
}

void BanditState::update_queues(std::span<const double> betas, std::span<const int> indicators) {
  if (betas.size() != clients() || indicators.size() != clients()) {
    throw std::invalid_argument("update_queues: one beta and indicator per client required");
  }
  for (std::size_t i = 0; i < clients(); ++i) {
    queues_[i] = std::max(queues_[i] + betas[i] - indicators[i], 0.0);
  }
}

void BanditState::observe(const Assignment& assignment, std::span<const double> rewards) {
  if (rewards.size() != clients() || assignment.num_clients() != clients() ||
      assignment.num_channels() != channels()) {
    throw std::invalid_argument("observe: shape mismatch");
  }
  for (std::size_t j = 0; j < channels(); ++j) {
    const double r = rewards[assignment.client_on(j)];
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("observe: reward outside [0, 1]");
  }
  for (std::size_t j = 0; j < channels(); ++j) {
    const std::size_t i = assignment.client_on(j);
    plays_(i, j) += 1.0;
    sums_(i, j) += rewards[i];
  }
}

double BanditState::mean(std::size_t i, std::size_t j) const {
  return plays_(i, j) > 0.0 ? sums_(i, j) / plays_(i, j) : 0.0;
}

double BanditState::client_plays(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < channels(); ++j) s += plays_(i, j);
  return s;
}

double BanditState::client_reward_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < channels(); ++j) s += sums_(i, j);
  return s;
}

RewardMatrix BanditState::estimated_rewards(double V) const {
  const double width = static_cast<double>(clients()) + 2.0;
  RewardMatrix e(clients(), channels());
  for (std::size_t i = 0; i < clients(); ++i) {
    const double log_plays = std::log(std::max(client_plays(i), 1.0));
    for (std::size_t j = 0; j < channels(); ++j) {
      const double n = plays_(i, j);
      if (n == 0.0) {
        e(i, j) = kUnexplored;
        continue;
      }
      e(i, j) = queues_[i] + V * sums_(i, j) / n + V * std::sqrt(width * log_plays / n);
    }
  }
  return e;
}

double ExplorationProbability(std::int64_t t, double T0) {
  return std::exp(-static_cast<double>(t) / T0);
}

Assignment select_assignment(const BanditState& state, const SchedulerConfig& config,
                             const std::optional<Assignment>& previous, Rng& rng) {
  const double kappa = Uniform01(rng);
  if (kappa >= 1.0 - ExplorationProbability(state.round(), config.T0)) {
    return random_assignment(state.clients(), state.channels(), rng);
  }
  const RewardMatrix e = state.estimated_rewards(config.V);
  if (config.policy == Policy::kMamabGmba) return gmba_step(e, previous, rng);
  return optimal_matching(e, rng);
}

Assignment baseline_random(std::size_t clients, std::size_t channels, Rng& rng) {
  return random_assignment(clients, channels, rng);
}

Assignment baseline_round_robin(std::int64_t t, std::size_t clients, std::size_t channels) {
  if (channels == 0 || clients < channels) {
    throw std::invalid_argument("round robin: need clients >= channels >= 1");
  }
  if (t < 0) throw std::invalid_argument("round robin: negative round");
  const std::size_t groups = (clients + channels - 1) / channels;
  const std::size_t g = static_cast<std::size_t>(t) % groups;
  std::vector<std::size_t> client_of_channel(channels);
  for (std::size_t k = 0; k < channels; ++k) client_of_channel[k] = (g * channels + k) % clients;
  return Assignment(clients, std::move(client_of_channel));
}

Assignment baseline_single_ucb(const BanditState& state, double c, Rng& rng) {
  const std::size_t clients = state.clients();
  const std::size_t channels = state.channels();
  const double log_t = std::log(std::max<double>(static_cast<double>(state.round()), 1.0));

  std::vector<double> index(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    const double s = state.client_plays(i);
    index[i] = s == 0.0 ? kUnexplored
                        : state.client_reward_sum(i) / s + c * std::sqrt(2.0 * log_t / s);
  }
  // Shuffle first so the stable sort breaks ties uniformly at random.
  std::vector<std::size_t> order(clients);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return index[a] > index[b]; });
  order.resize(channels);
  std::shuffle(order.begin(), order.end(), rng);
  return Assignment(clients, std::move(order));
}

Scheduler::Scheduler(SchedulerConfig config) : config_(config) { config_.Validate(); }

Assignment Scheduler::Next(const BanditState& state, Rng& rng) {
  Assignment next;
  switch (config_.policy) {
    case Policy::kMamabOm:
    case Policy::kMamabGmba:
      next = select_assignment(state, config_, previous_, rng);
      break;
    case Policy::kRandom:
      next = baseline_random(state.clients(), state.channels(), rng);
      break;
    case Policy::kRoundRobin:
      next = baseline_round_robin(state.round(), state.clients(), state.channels());
      break;
    case Policy::kSingleUcb:
      next = baseline_single_ucb(state, config_.single_ucb_c, rng);
      break;
  }
  previous_ = next;
  return next;
}

}  // namespace fedsched::bandit
