#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fedsched/matrix.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

// Edge weight of a (client, channel) pair that has never been observed.
// Larger than every finite weight.
inline constexpr double kUnexplored = std::numeric_limits<double>::infinity();

// U x N matrix of edge weights e_{i,j}, rows are clients, columns channels.
using RewardMatrix = Matrix;

// Client-to-channel selection. Every channel carries exactly one client and
// no client holds more than one channel; clients without a channel are
// unmatched for the round.
class Assignment {
 public:
  Assignment() = default;
  // Throws std::invalid_argument unless the mapping is injective and in range.
  Assignment(std::size_t num_clients, std::vector<std::size_t> client_of_channel);

  std::size_t num_clients() const { return num_clients_; }
  std::size_t num_channels() const { return client_of_channel_.size(); }
  std::size_t client_on(std::size_t channel) const { return client_of_channel_.at(channel); }
  const std::vector<std::size_t>& client_of_channel() const { return client_of_channel_; }

  bool IsMatched(std::size_t client) const;
  std::optional<std::size_t> ChannelOf(std::size_t client) const;

  // Selection matrix a(t) as 0/1 entries, clients x channels.
  std::vector<std::vector<int>> ToSelectionMatrix() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::size_t num_clients_ = 0;
  std::vector<std::size_t> client_of_channel_;
};

// Checks the binary / at-most-one-channel-per-client / one-client-per-channel
// constraints directly on a selection matrix.
bool SatisfiesSelectionConstraints(const std::vector<std::vector<int>>& selection);

// Minimum edge weight over matched pairs. Unmatched clients do not enter.
double min_matched_edge(const RewardMatrix& matrix, const Assignment& assignment);

struct MatchingResult {
  Assignment assignment;
  double value = 0.0;
};

// Largest number of injective channel->client maps brute_force_optimal
// agrees to enumerate.
inline constexpr double kBruteForceLimit = 1e7;

// Visits every injective channel->client map in lexicographic order.
void ForEachAssignment(std::size_t clients, std::size_t channels,
                       const std::function<void(const Assignment&)>& visit);

// Exhaustive max-min search. Ties resolve to the lexicographically first
// assignment. Throws std::length_error above kBruteForceLimit.
MatchingResult brute_force_optimal(const RewardMatrix& matrix);

// Bottleneck matching by pruning: repeatedly delete the smallest remaining
// edge while a channel-saturating matching survives, and return the last
// surviving matching. Ties between equal weights break by index.
Assignment optimal_matching(const RewardMatrix& matrix);

// Same, with ties broken uniformly at random.
Assignment optimal_matching(const RewardMatrix& matrix, Rng& rng);

// Threshold form of the same search: binary search over the distinct edge
// weights for the largest w such that edges >= w admit a channel-saturating
// matching.
Assignment optimal_matching_threshold(const RewardMatrix& matrix);

// Scan clients in `order`; each takes its best remaining channel until
// channels run out. With `ties` set, equal-weight channels are chosen
// uniformly at random, otherwise the lowest index wins.
Assignment greedy_with_order(const RewardMatrix& matrix, std::span<const std::size_t> order,
                             Rng* ties = nullptr);

// One GMBA call: greedy over a uniformly random order, then keep whichever of
// {previous, greedy} has the larger bottleneck under the current matrix.
// A tie keeps the previous assignment.
Assignment gmba_step(const RewardMatrix& matrix, const std::optional<Assignment>& previous,
                     Rng& rng);

// Uniform over all valid assignments: random N-subset of clients, random
// bijection onto the channels.
Assignment random_assignment(std::size_t clients, std::size_t channels, Rng& rng);

}  // namespace fedsched
