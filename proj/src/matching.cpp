#include "fedsched/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedsched {
namespace {

void CheckShape(const RewardMatrix& matrix) {
  if (matrix.cols() == 0 || matrix.rows() < matrix.cols()) {
    throw std::invalid_argument("reward matrix must satisfy clients >= channels >= 1");
  }
  for (double w : matrix.data()) {
    if (std::isnan(w)) throw std::invalid_argument("reward matrix contains NaN");
  }
}

// Channel-saturating bipartite matching by augmenting paths over the alive
// edges. Channels are the left side; clients the right.
class AugmentingMatcher {
 public:
  AugmentingMatcher(std::size_t clients, std::size_t channels)
      : clients_(clients),
        channels_(channels),
        alive_(clients * channels, 1),
        client_of_channel_(channels, kNone),
        channel_of_client_(clients, kNone),
        visited_(clients, 0) {}

  void SetAlive(std::size_t client, std::size_t channel, bool alive) {
    alive_[client * channels_ + channel] = alive ? 1 : 0;
  }
  bool Alive(std::size_t client, std::size_t channel) const {
    return alive_[client * channels_ + channel] != 0;
  }

  std::size_t ClientOn(std::size_t channel) const { return client_of_channel_[channel]; }

  void Unmatch(std::size_t channel) {
    const std::size_t c = client_of_channel_[channel];
    if (c != kNone) channel_of_client_[c] = kNone;
    client_of_channel_[channel] = kNone;
  }

  bool Augment(std::size_t channel) {
    std::fill(visited_.begin(), visited_.end(), 0);
    return TryChannel(channel);
  }

  // Attempts to saturate every channel; returns false if impossible.
  bool SaturateAll() {
    for (std::size_t j = 0; j < channels_; ++j) {
      if (client_of_channel_[j] == kNone && !Augment(j)) return false;
    }
    return true;
  }

  std::vector<std::size_t> Snapshot() const { return client_of_channel_; }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

 private:
  bool TryChannel(std::size_t channel) {
    for (std::size_t i = 0; i < clients_; ++i) {
      if (!Alive(i, channel) || visited_[i]) continue;
      visited_[i] = 1;
      const std::size_t holder = channel_of_client_[i];
      if (holder == kNone || TryChannel(holder)) {
        client_of_channel_[channel] = i;
        channel_of_client_[i] = channel;
        return true;
      }
    }
    return false;
  }

  std::size_t clients_;
  std::size_t channels_;
  std::vector<char> alive_;
  std::vector<std::size_t> client_of_channel_;
  std::vector<std::size_t> channel_of_client_;
  std::vector<char> visited_;
};

struct Edge {
  double weight;
  std::size_t client;
  std::size_t channel;
};

std::vector<Edge> EdgesAscending(const RewardMatrix& matrix) {
  std::vector<Edge> edges;
  edges.reserve(matrix.rows() * matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (std::size_t j = 0; j < matrix.cols(); ++j) edges.push_back({matrix(i, j), i, j});
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.weight < b.weight; });
  return edges;
}

}  // namespace

Assignment::Assignment(std::size_t num_clients, std::vector<std::size_t> client_of_channel)
    : num_clients_(num_clients), client_of_channel_(std::move(client_of_channel)) {
  std::vector<char> seen(num_clients_, 0);
  for (std::size_t c : client_of_channel_) {
    if (c >= num_clients_) throw std::invalid_argument("Assignment: client index out of range");
    if (seen[c]) throw std::invalid_argument("Assignment: client holds two channels");
    seen[c] = 1;
  }
}

bool Assignment::IsMatched(std::size_t client) const { return ChannelOf(client).has_value(); }

std::optional<std::size_t> Assignment::ChannelOf(std::size_t client) const {
  for (std::size_t j = 0; j < client_of_channel_.size(); ++j) {
    if (client_of_channel_[j] == client) return j;
  }
  return std::nullopt;
}

std::vector<std::vector<int>> Assignment::ToSelectionMatrix() const {
  std::vector<std::vector<int>> a(num_clients_, std::vector<int>(num_channels(), 0));
  for (std::size_t j = 0; j < num_channels(); ++j) a[client_of_channel_[j]][j] = 1;
  return a;
}

bool SatisfiesSelectionConstraints(const std::vector<std::vector<int>>& selection) {
  if (selection.empty()) return false;
  const std::size_t channels = selection.front().size();
  std::vector<int> per_channel(channels, 0);
  for (const auto& row : selection) {
    if (row.size() != channels) return false;
    int per_client = 0;
    for (std::size_t j = 0; j < channels; ++j) {
      if (row[j] != 0 && row[j] != 1) return false;
      per_client += row[j];
      per_channel[j] += row[j];
    }
    if (per_client > 1) return false;
  }
  return std::all_of(per_channel.begin(), per_channel.end(), [](int n) { return n == 1; });
}

double min_matched_edge(const RewardMatrix& matrix, const Assignment& assignment) {
  if (assignment.num_channels() == 0) {
    throw std::invalid_argument("min_matched_edge: empty assignment");
  }
  double value = kUnexplored;
  for (std::size_t j = 0; j < assignment.num_channels(); ++j) {
    value = std::min(value, matrix(assignment.client_on(j), j));
  }
  return value;
}

void ForEachAssignment(std::size_t clients, std::size_t channels,
                       const std::function<void(const Assignment&)>& visit) {
  std::vector<std::size_t> pick(channels, 0);
  std::vector<char> used(clients, 0);
  std::function<void(std::size_t)> place = [&](std::size_t channel) {
    if (channel == channels) {
      visit(Assignment(clients, pick));
      return;
    }
    for (std::size_t c = 0; c < clients; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      pick[channel] = c;
      place(channel + 1);
      used[c] = 0;
    }
  };
  place(0);
}

MatchingResult brute_force_optimal(const RewardMatrix& matrix) {
  CheckShape(matrix);
  double count = 1.0;
  for (std::size_t k = 0; k < matrix.cols(); ++k) {
    count *= static_cast<double>(matrix.rows() - k);
  }
  if (count > kBruteForceLimit) {
    throw std::length_error("brute_force_optimal: instance too large to enumerate");
  }
  std::optional<MatchingResult> best;
  ForEachAssignment(matrix.rows(), matrix.cols(), [&](const Assignment& a) {
    const double v = min_matched_edge(matrix, a);
    if (!best || v > best->value) best = MatchingResult{a, v};
  });
  return *best;
}

Assignment optimal_matching(const RewardMatrix& matrix) {
  CheckShape(matrix);
  const std::size_t clients = matrix.rows();
  const std::size_t channels = matrix.cols();
  AugmentingMatcher matcher(clients, channels);
  matcher.SaturateAll();  // complete graph: always succeeds

  for (const Edge& e : EdgesAscending(matrix)) {
    matcher.SetAlive(e.client, e.channel, false);
    if (matcher.ClientOn(e.channel) != e.client) continue;
    const auto before = matcher.Snapshot();
    matcher.Unmatch(e.channel);
    if (!matcher.Augment(e.channel)) {
      return Assignment(clients, before);
    }
  }
  // Unreachable for channels >= 1: deleting every edge must fail.
  throw std::logic_error("optimal_matching: pruning never failed");
}

Assignment optimal_matching(const RewardMatrix& matrix, Rng& rng) {
  CheckShape(matrix);
  std::vector<std::size_t> row_perm(matrix.rows());
  std::vector<std::size_t> col_perm(matrix.cols());
  std::iota(row_perm.begin(), row_perm.end(), 0);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  std::shuffle(row_perm.begin(), row_perm.end(), rng);
  std::shuffle(col_perm.begin(), col_perm.end(), rng);

  RewardMatrix permuted(matrix.rows(), matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (std::size_t j = 0; j < matrix.cols(); ++j)
      permuted(i, j) = matrix(row_perm[i], col_perm[j]);

  const Assignment local = optimal_matching(permuted);
  std::vector<std::size_t> client_of_channel(matrix.cols());
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    client_of_channel[col_perm[j]] = row_perm[local.client_on(j)];
  }
  return Assignment(matrix.rows(), std::move(client_of_channel));
}

Assignment optimal_matching_threshold(const RewardMatrix& matrix) {
  CheckShape(matrix);
  const std::size_t clients = matrix.rows();
  const std::size_t channels = matrix.cols();

  std::vector<double> levels = matrix.data();
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  auto feasible = [&](double threshold) -> std::optional<std::vector<std::size_t>> {
    AugmentingMatcher m(clients, channels);
    for (std::size_t i = 0; i < clients; ++i)
      for (std::size_t j = 0; j < channels; ++j) m.SetAlive(i, j, matrix(i, j) >= threshold);
    if (!m.SaturateAll()) return std::nullopt;
    return m.Snapshot();
  };

  // levels[lo] is always feasible (the smallest weight keeps the full graph).
  std::size_t lo = 0;
  std::size_t hi = levels.size();
  auto best = feasible(levels[0]);
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (auto m = feasible(levels[mid])) {
      lo = mid;
      best = std::move(m);
    } else {
      hi = mid;
    }
  }
  return Assignment(clients, *best);
}

Assignment greedy_with_order(const RewardMatrix& matrix, std::span<const std::size_t> order,
                             Rng* ties) {
  CheckShape(matrix);
  const std::size_t clients = matrix.rows();
  const std::size_t channels = matrix.cols();
  if (order.size() != clients) {
    throw std::invalid_argument("greedy_with_order: order must list every client once");
  }
  std::vector<char> seen(clients, 0);
  for (std::size_t c : order) {
    if (c >= clients || seen[c]) {
      throw std::invalid_argument("greedy_with_order: order is not a permutation");
    }
    seen[c] = 1;
  }

  std::vector<std::size_t> client_of_channel(channels, 0);
  std::vector<char> taken(channels, 0);
  std::vector<std::size_t> tied;
  std::size_t assigned = 0;
  for (std::size_t client : order) {
    if (assigned == channels) break;
    tied.clear();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < channels; ++j) {
      if (taken[j]) continue;
      const double w = matrix(client, j);
      if (tied.empty() || w > best) {
        best = w;
        tied.assign(1, j);
      } else if (w == best) {
        tied.push_back(j);
      }
    }
    std::size_t pick = tied.front();
    if (ties != nullptr && tied.size() > 1) {
      pick = tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(*ties)];
    }
    taken[pick] = 1;
    client_of_channel[pick] = client;
    ++assigned;
  }
  return Assignment(clients, std::move(client_of_channel));
}

Assignment gmba_step(const RewardMatrix& matrix, const std::optional<Assignment>& previous,
                     Rng& rng) {
  std::vector<std::size_t> order(matrix.rows());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Assignment greedy = greedy_with_order(matrix, order, &rng);
  if (!previous) return greedy;
  if (previous->num_clients() != matrix.rows() || previous->num_channels() != matrix.cols()) {
    throw std::invalid_argument("gmba_step: previous assignment has the wrong shape");
  }
  return min_matched_edge(matrix, greedy) > min_matched_edge(matrix, *previous) ? greedy
                                                                                 : *previous;
}

Assignment random_assignment(std::size_t clients, std::size_t channels, Rng& rng) {
  if (channels == 0 || clients < channels) {
    throw std::invalid_argument("random_assignment: need clients >= channels >= 1");
  }
  std::vector<std::size_t> perm(clients);
  std::iota(perm.begin(), perm.end(), 0);
  // Partial Fisher-Yates: the first `channels` slots are a uniform ordered sample.
  for (std::size_t k = 0; k < channels; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, clients - 1);
    std::swap(perm[k], perm[pick(rng)]);
  }
  perm.resize(channels);
  return Assignment(clients, std::move(perm));
}

}  // namespace fedsched
