#include "fedsched/bandit.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace fedsched::bandit {
namespace {

TEST(PolicyNameTest, RoundTrips) {
  for (Policy p : {Policy::kMamabOm, Policy::kMamabGmba, Policy::kRandom, Policy::kRoundRobin,
                   Policy::kSingleUcb}) {
    EXPECT_EQ(ParsePolicy(PolicyName(p)), p);
  }
  EXPECT_THROW(ParsePolicy("thompson"), std::invalid_argument);
}

TEST(SchedulerConfigTest, Validate) {
  SchedulerConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.V = -1.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c.V = 0.0;
  c.T0 = 0.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(RewardTest, Examples) {
  EXPECT_DOUBLE_EQ(reward(0.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(reward(2.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(reward(1.5, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(reward(std::numeric_limits<double>::infinity(), 2.0), 0.0);
  EXPECT_THROW(reward(1.0, 0.0), std::invalid_argument);
}

TEST(QueueTest, UpdateExamples) {
  BanditState s(3, 1);
  const std::vector<double> beta = {0.4, 0.4, 0.4};
  s.update_queues(beta, std::vector<int>{1, 0, 0});
  EXPECT_DOUBLE_EQ(s.queue(0), 0.0);
  EXPECT_DOUBLE_EQ(s.queue(1), 0.4);
  s.update_queues(std::vector<double>{0.4, 0.1, 0.1}, std::vector<int>{0, 0, 1});
  EXPECT_DOUBLE_EQ(s.queue(0), 0.4);
  EXPECT_DOUBLE_EQ(s.queue(1), 0.5);
  s.update_queues(beta, std::vector<int>{0, 0, 0});
  s.update_queues(beta, std::vector<int>{0, 1, 0});
  EXPECT_NEAR(s.queue(1), 0.3, 1e-15);  // 0.5 + 0.4 = 0.9, then 0.9 + 0.4 - 1
}

TEST(QueueTest, DominatesArrivalMinusService) {
  BanditState s(4, 2);
  Rng rng(6);
  const std::vector<double> beta = {0.1, 0.5, 0.7, 0.9};
  std::vector<double> arrivals(4, 0.0);
  std::vector<double> served(4, 0.0);
  for (int t = 0; t < 2000; ++t) {
    std::vector<int> ind(4);
    for (std::size_t i = 0; i < 4; ++i) {
      ind[i] = Uniform01(rng) < 0.5 ? 1 : 0;
      arrivals[i] += beta[i];
      served[i] += ind[i];
    }
    s.update_queues(beta, ind);
    for (std::size_t i = 0; i < 4; ++i) {
      ASSERT_GE(s.queue(i), 0.0);
      ASSERT_GE(s.queue(i), arrivals[i] - served[i] - 1e-9);
    }
  }
}

TEST(ObserveTest, Examples) {
  BanditState s(3, 2);
  const Assignment a(3, {2, 0});
  s.observe(a, std::vector<double>{0.6, 0.9, 0.25});
  EXPECT_EQ(s.plays(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean(2, 0), 0.25);
  EXPECT_DOUBLE_EQ(s.mean(0, 1), 0.6);
  EXPECT_EQ(s.plays(1, 0), 0.0);
  EXPECT_EQ(s.plays(1, 1), 0.0);
  EXPECT_EQ(s.client_plays(1), 0.0);

  BanditState t(2, 1);
  t.observe(Assignment(2, {0}), std::vector<double>{0.2, 0.0});
  t.observe(Assignment(2, {0}), std::vector<double>{0.4, 0.0});
  EXPECT_DOUBLE_EQ(t.mean(0, 0), 0.3);
}

TEST(ObserveTest, RejectsOutOfRangeReward) {
  BanditState s(2, 1);
  EXPECT_THROW(s.observe(Assignment(2, {0}), std::vector<double>{1.5, 0.0}),
               std::invalid_argument);
  EXPECT_THROW(s.observe(Assignment(2, {1}), std::vector<double>{0.0, -0.1}),
               std::invalid_argument);
  EXPECT_EQ(s.plays(0, 0), 0.0);
  // Out-of-range values on unmatched clients are ignored.
  EXPECT_NO_THROW(s.observe(Assignment(2, {0}), std::vector<double>{0.5, 7.0}));
}

TEST(EstimatedRewardsTest, Examples) {
  BanditState s(10, 2);
  EXPECT_EQ(s.estimated_rewards(1.0)(0, 0), kUnexplored);

  s.observe(Assignment(10, {0, 1}), std::vector<double>{0.7, 0.3, 0, 0, 0, 0, 0, 0, 0, 0});
  // One play in total: the confidence width vanishes.
  EXPECT_DOUBLE_EQ(s.estimated_rewards(2.0)(0, 0), 1.4);
  EXPECT_EQ(s.estimated_rewards(2.0)(0, 1), kUnexplored);

  // n = 4 on (2, 0) and 12 more plays elsewhere: s_i = 16.
  BanditState u(10, 2);
  std::vector<double> r(10, 0.5);
  for (int k = 0; k < 4; ++k) u.observe(Assignment(10, {2, 3}), r);
  for (int k = 0; k < 12; ++k) u.observe(Assignment(10, {3, 2}), r);
  const double expected = 0.5 + std::sqrt(12.0 * std::log(16.0) / 4.0);
  EXPECT_NEAR(u.estimated_rewards(1.0)(2, 0), expected, 1e-12);
  EXPECT_NEAR(expected, 3.3841, 1e-4);
}

TEST(EstimatedRewardsTest, ZeroVReducesToQueue) {
  BanditState s(3, 2);
  Rng rng(1);
  for (int k = 0; k < 30; ++k) {
    std::vector<double> r = {Uniform01(rng), Uniform01(rng), Uniform01(rng)};
    s.observe(random_assignment(3, 2, rng), r);
  }
  s.update_queues(std::vector<double>{0.9, 0.3, 0.0}, std::vector<int>{0, 0, 0});
  const RewardMatrix e = s.estimated_rewards(0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (s.plays(i, j) > 0) EXPECT_EQ(e(i, j), s.queue(i));
    }
  }
}

TEST(EstimatedRewardsTest, QueueEntersAdditively) {
  BanditState a(3, 2);
  BanditState b(3, 2);
  Rng rng(2);
  for (int k = 0; k < 40; ++k) {
    const Assignment as = random_assignment(3, 2, rng);
    std::vector<double> r = {Uniform01(rng), Uniform01(rng), Uniform01(rng)};
    a.observe(as, r);
    b.observe(as, r);
  }
  b.update_queues(std::vector<double>{1.0, 0.2, 0.6}, std::vector<int>{0, 0, 0});
  const RewardMatrix ea = a.estimated_rewards(10.0);
  const RewardMatrix eb = b.estimated_rewards(10.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (a.plays(i, j) == 0) continue;
      EXPECT_NEAR(eb(i, j) - b.queue(i), ea(i, j), 1e-12);
    }
  }
}

TEST(ExplorationTest, Probability) {
  EXPECT_DOUBLE_EQ(ExplorationProbability(0, 100.0), 1.0);
  EXPECT_NEAR(ExplorationProbability(1000, 100.0), 4.54e-5, 1e-7);
}

TEST(SelectAssignmentTest, RoundZeroAlwaysExplores) {
  // With every pair explored and a unique max-min optimum, the exploitation
  // branch would always return it; round 0 must still randomize.
  BanditState s(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      std::vector<std::size_t> other = {(i + 1) % 4, (i + 2) % 4};
      std::vector<std::size_t> ch(2);
      ch[j] = i;
      ch[1 - j] = other[0];
      std::vector<double> r(4, 0.0);
      r[i] = (i == 0 || i == 1) ? 1.0 : 0.0;
      s.observe(Assignment(4, ch), r);
    }
  }
  SchedulerConfig config;
  config.V = 100.0;
  Rng rng(3);
  std::set<std::vector<std::size_t>> seen;
  for (int k = 0; k < 200; ++k) {
    seen.insert(select_assignment(s, config, std::nullopt, rng).client_of_channel());
  }
  EXPECT_GT(seen.size(), 4u);
}

TEST(SelectAssignmentTest, LateRoundsExploit) {
  const Matrix mu = Matrix::FromRows({{0.9, 0.1}, {0.1, 0.8}, {0.2, 0.2}});
  BanditState s(3, 2);
  for (int k = 0; k < 50; ++k) {
    s.observe(Assignment(3, {0, 1}), std::vector<double>{mu(0, 0), mu(1, 1), 0.0});
    s.observe(Assignment(3, {1, 0}), std::vector<double>{mu(0, 1), mu(1, 0), 0.0});
    s.observe(Assignment(3, {2, 0}), std::vector<double>{mu(0, 1), 0.0, mu(2, 0)});
    s.observe(Assignment(3, {0, 2}), std::vector<double>{mu(0, 0), 0.0, mu(2, 1)});
  }
  s.set_round(100000);
  SchedulerConfig config;
  config.V = 100.0;
  Rng rng(4);
  for (Policy p : {Policy::kMamabOm, Policy::kMamabGmba}) {
    config.policy = p;
    std::optional<Assignment> prev;
    for (int k = 0; k < 30; ++k) prev = select_assignment(s, config, prev, rng);
    EXPECT_EQ(*prev, Assignment(3, {0, 1})) << PolicyName(p);
  }
}

TEST(SelectAssignmentTest, DeterministicForSeed) {
  BanditState s(6, 3);
  Rng fill(8);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> r(6);
    for (double& v : r) v = Uniform01(fill);
    s.observe(random_assignment(6, 3, fill), r);
  }
  s.set_round(50);
  SchedulerConfig config;
  Rng a(77);
  Rng b(77);
  for (int k = 0; k < 20; ++k) {
    EXPECT_EQ(select_assignment(s, config, std::nullopt, a),
              select_assignment(s, config, std::nullopt, b));
  }
}

TEST(BaselineRandomTest, SelectionFrequency) {
  Rng rng(10);
  std::vector<int> hits(10, 0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const Assignment a = baseline_random(10, 4, rng);
    ASSERT_TRUE(SatisfiesSelectionConstraints(a.ToSelectionMatrix()));
    for (std::size_t c : a.client_of_channel()) ++hits[c];
  }
  for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / draws, 0.4, 0.01);
}

TEST(BaselineRandomTest, SquareGivesPermutations) {
  Rng rng(11);
  std::set<std::vector<std::size_t>> seen;
  for (int k = 0; k < 2000; ++k) seen.insert(baseline_random(3, 3, rng).client_of_channel());
  EXPECT_EQ(seen.size(), 6u);
}

TEST(RoundRobinTest, Examples) {
  EXPECT_EQ(baseline_round_robin(0, 10, 4), Assignment(10, {0, 1, 2, 3}));
  EXPECT_EQ(baseline_round_robin(1, 10, 4), Assignment(10, {4, 5, 6, 7}));
  EXPECT_EQ(baseline_round_robin(2, 10, 4), Assignment(10, {8, 9, 0, 1}));
  EXPECT_EQ(baseline_round_robin(3, 10, 4), baseline_round_robin(0, 10, 4));
  EXPECT_EQ(baseline_round_robin(5, 10, 4), baseline_round_robin(2, 10, 4));
}

TEST(SingleUcbTest, GreedyWithoutExploration) {
  BanditState s(2, 1);
  s.observe(Assignment(2, {0}), std::vector<double>{0.9, 0.0});
  s.observe(Assignment(2, {1}), std::vector<double>{0.0, 0.1});
  s.set_round(2);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(baseline_single_ucb(s, 0.0, rng).client_on(0), 0u);
}

TEST(SingleUcbTest, UnplayedClientAlwaysChosen) {
  BanditState s(4, 2);
  for (int k = 0; k < 10; ++k) {
    s.observe(Assignment(4, {0, 1}), std::vector<double>{1.0, 1.0, 0, 0});
    s.observe(Assignment(4, {2, 0}), std::vector<double>{1.0, 0, 1.0, 0});
  }
  s.set_round(20);
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const Assignment a = baseline_single_ucb(s, 0.1, rng);
    EXPECT_TRUE(a.IsMatched(3));
    EXPECT_TRUE(SatisfiesSelectionConstraints(a.ToSelectionMatrix()));
  }
}

TEST(SchedulerTest, AllPoliciesEmitValidAssignments) {
  Rng rng(5);
  for (Policy p : {Policy::kMamabOm, Policy::kMamabGmba, Policy::kRandom, Policy::kRoundRobin,
                   Policy::kSingleUcb}) {
    SchedulerConfig config;
    config.policy = p;
    config.T0 = 20.0;
    Scheduler sched(config);
    BanditState s(7, 3);
    const std::vector<double> beta(7, 3.0 / 7.0);
    std::vector<int> ind(7, 0);
    for (int t = 0; t < 300; ++t) {
      s.set_round(t);
      if (t > 0) s.update_queues(beta, ind);
      const Assignment a = sched.Next(s, rng);
      ASSERT_TRUE(SatisfiesSelectionConstraints(a.ToSelectionMatrix())) << PolicyName(p);
      std::vector<double> r(7, 0.0);
      std::fill(ind.begin(), ind.end(), 0);
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t i = a.client_on(j);
        r[i] = std::min(1.0, 0.1 * static_cast<double>(i + j));
        ind[i] = 1;
      }
      s.observe(a, r);
    }
  }
}

TEST(ConvergenceTest, MeansApproachTruth) {
  const Matrix mu = Matrix::FromRows({{0.8, 0.3}, {0.4, 0.9}, {0.2, 0.5}, {0.6, 0.1}});
  BanditState s(4, 2);
  SchedulerConfig config;
  Scheduler sched(config);
  Rng rng(19);
  Rng noise(20);
  const std::vector<double> beta(4, 0.5);
  std::vector<int> ind(4, 0);
  for (int t = 0; t < 20000; ++t) {
    s.set_round(t);
    if (t > 0) s.update_queues(beta, ind);
    const Assignment a = sched.Next(s, rng);
    std::vector<double> r(4, 0.0);
    std::fill(ind.begin(), ind.end(), 0);
    for (std::size_t j = 0; j < 2; ++j) {
      const std::size_t i = a.client_on(j);
      r[i] = Uniform01(noise) < mu(i, j) ? 1.0 : 0.0;
      ind[i] = 1;
    }
    s.observe(a, r);
  }
  int checked = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (s.plays(i, j) < 2000) continue;
      ++checked;
      EXPECT_NEAR(s.mean(i, j), mu(i, j), 0.02) << i << "," << j;
    }
  }
  EXPECT_GT(checked, 0);
}

}  // namespace
}  // namespace fedsched::bandit
