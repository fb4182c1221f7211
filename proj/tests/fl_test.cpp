#include "fedsched/fl.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

namespace fedsched::fl {
namespace {

std::vector<double> RandomVector(std::size_t n, double scale, Rng& rng) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

double Norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

Dataset OneSample(const std::vector<double>& x, int label) {
  Dataset d;
  d.dim = x.size();
  d.features = x;
  d.labels = {label};
  return d;
}

TEST(BlobSpecTest, Validate) {
  EXPECT_NO_THROW(BlobSpec{}.Validate());
  EXPECT_THROW((BlobSpec{4, 3, 2.0}.Validate()), std::invalid_argument);
  EXPECT_THROW((BlobSpec{1, 3, 2.0}.Validate()), std::invalid_argument);
}

TEST(SampleBlobsTest, ClassMeansSitOnScaledAxes) {
  const BlobSpec spec{3, 5, 4.0};
  Rng rng(1);
  std::vector<int> labels(30000);
  for (std::size_t k = 0; k < labels.size(); ++k) labels[k] = static_cast<int>(k % 3);
  const Dataset d = SampleBlobs(spec, labels, rng);
  std::vector<std::vector<double>> mean(3, std::vector<double>(5, 0.0));
  for (std::size_t k = 0; k < d.size(); ++k) {
    for (std::size_t j = 0; j < 5; ++j) mean[d.labels[k]][j] += d.row(k)[j] / 10000.0;
  }
  for (int m = 0; m < 3; ++m) {
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(mean[m][j], m == j ? 4.0 : 0.0, 0.05);
  }
}

TEST(PartitionTest, UniformWhenGammaZero) {
  const BlobSpec spec;
  Rng rng(2);
  const std::vector<std::size_t> sizes(6, 4000);
  const Partition p = partition_synthetic(6, spec, sizes, 0.0, rng);
  const Matrix r = p.class_ratios();
  for (double v : r.data()) EXPECT_NEAR(v, 0.25, 0.03);
}

TEST(PartitionTest, SingleClassWhenGammaOne) {
  const BlobSpec spec;
  Rng rng(3);
  const std::vector<std::size_t> sizes = {50, 60, 70, 80, 90};
  const Partition p = partition_synthetic(5, spec, sizes, 1.0, rng);
  const Matrix r = p.class_ratios();
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r(i, i % 4), 1.0);
    EXPECT_EQ(p.clients[i].size(), sizes[i]);
  }
}

TEST(PartitionTest, DominantRatioAtGammaPointEight) {
  const BlobSpec spec;
  Rng rng(4);
  const std::vector<std::size_t> sizes(8, 5000);
  const Partition p = partition_synthetic(8, spec, sizes, 0.8, rng);
  const Matrix r = p.class_ratios();
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(r(i, i % 4), 0.85, 0.01);
}

TEST(PartitionTest, RatiosAreConsistent) {
  const BlobSpec spec;
  Rng rng(5);
  const std::vector<std::size_t> sizes = {120, 333, 57, 410, 200, 91, 600};
  const Partition p = partition_synthetic(7, spec, sizes, 0.6, rng);
  const auto weights = p.client_weights();
  EXPECT_NEAR(std::accumulate(weights.begin(), weights.end(), 0.0), 1.0, 1e-12);
  const Matrix r = p.class_ratios();
  const auto q = p.global_class_ratios();
  for (std::size_t m = 0; m < 4; ++m) {
    double mixed = 0.0;
    for (std::size_t i = 0; i < 7; ++i) mixed += weights[i] * r(i, m);
    EXPECT_NEAR(q[m], mixed, 1e-12);
  }
  for (std::size_t i = 0; i < 7; ++i) {
    double row = 0.0;
    for (std::size_t m = 0; m < 4; ++m) row += r(i, m);
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}

TEST(PartitionTest, RejectsBadInput) {
  Rng rng(6);
  const std::vector<std::size_t> sizes = {10, 0};
  EXPECT_THROW(partition_synthetic(2, BlobSpec{}, sizes, 0.5, rng), std::invalid_argument);
  const std::vector<std::size_t> ok = {10, 10};
  EXPECT_THROW(partition_synthetic(2, BlobSpec{}, ok, 1.5, rng), std::invalid_argument);
  EXPECT_THROW(partition_synthetic(3, BlobSpec{}, ok, 0.5, rng), std::invalid_argument);
}

TEST(SoftmaxTest, SumsToOneAndIsStable) {
  Rng rng(7);
  Model m = RandomModel(4, 6, 50.0, rng);
  const auto x = RandomVector(6, 10.0, rng);
  const auto p = Softmax(m, x);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  for (int y = 0; y < 4; ++y) {
    const double loss = sample_loss(m, x, y);
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_GE(loss, 0.0);
  }
}

TEST(GradientTest, MatchesCentralDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Model m = RandomModel(4, 5, 0.5, rng);
    const auto x = RandomVector(5, 1.5, rng);
    const int y = static_cast<int>(rng() % 4);
    const Model g = sample_gradient(m, x, y);
    std::vector<double> numeric(m.param_count());
    const double h = 1e-5;
    for (std::size_t k = 0; k < m.param_count(); ++k) {
      const double saved = m.params[k];
      m.params[k] = saved + h;
      const double up = sample_loss(m, x, y);
      m.params[k] = saved - h;
      const double down = sample_loss(m, x, y);
      m.params[k] = saved;
      numeric[k] = (up - down) / (2.0 * h);
    }
    std::vector<double> diff(numeric.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = numeric[k] - g.params[k];
    EXPECT_LE(Norm(diff), 1e-5 * Norm(g.params));
  }
}

TEST(ClipTest, BoundsNormAndKeepsShortVectors) {
  Rng rng(9);
  std::uniform_real_distribution<double> clip_d(0.01, 5.0);
  for (int k = 0; k < 10000; ++k) {
    auto g = RandomVector(12, 3.0, rng);
    const auto before = g;
    const double c = clip_d(rng);
    ClipToNorm(g, c);
    EXPECT_LE(Norm(g), c + 1e-9);
    if (Norm(before) <= c) EXPECT_EQ(g, before);
  }
  std::vector<double> z = {3.0, 4.0};
  ClipToNorm(z, 0.0);
  EXPECT_EQ(Norm(z), 0.0);
}

TEST(LocalTrainTest, NoOpWithoutStepOrGradient) {
  Rng rng(10);
  const BlobSpec spec;
  const Dataset d = make_test_set(spec, 40, rng);
  const Model m = RandomModel(4, 16, 0.1, rng);
  EXPECT_EQ(local_train(m, d, {0.0, 1.0, 5, 10}, rng), m);
  EXPECT_EQ(local_train(m, d, {0.1, 0.0, 5, 10}, rng), m);
}

TEST(LocalTrainTest, SingleStepMatchesClosedForm) {
  Rng rng(11);
  const Model m = RandomModel(3, 4, 0.3, rng);
  const std::vector<double> x = {0.2, -0.1, 0.4, 0.3};
  const int y = 2;
  const Model trained = local_train(m, OneSample(x, y), {0.05, 100.0, 1, 1}, rng);
  // Softmax-regression gradient: (p - onehot(y)) x^T and (p - onehot(y)).
  const auto p = Softmax(m, x);
  for (std::size_t c = 0; c < 3; ++c) {
    const double err = p[c] - (c == y ? 1.0 : 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(trained.weight(c, k), m.weight(c, k) - 0.05 * err * x[k], 1e-10);
    }
    EXPECT_NEAR(trained.bias(c), m.bias(c) - 0.05 * err, 1e-10);
  }
}

TEST(LocalTrainTest, ClippedUpdateIsBounded) {
  Rng rng(12);
  const Model m = RandomModel(4, 16, 0.1, rng);
  const Dataset d = make_test_set(BlobSpec{4, 16, 10.0}, 64, rng);
  const TrainConfig config{0.2, 0.5, 3, 8};
  const Model w = local_train(m, d, config, rng);
  std::vector<double> delta(m.param_count());
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = w.params[k] - m.params[k];
  EXPECT_LE(Norm(delta), config.eta * config.clip * config.tau + 1e-12);
}

TEST(LocalTrainTest, RejectsEmptyData) {
  Rng rng(13);
  Dataset empty;
  empty.dim = 16;
  EXPECT_THROW(local_train(Model(4, 16), empty, {}, rng), std::invalid_argument);
}

TEST(LocalTrainTest, LearnsSeparableData) {
  Rng rng(14);
  const BlobSpec spec{4, 16, 4.0};
  const Dataset train = make_test_set(spec, 800, rng);
  const Dataset test = make_test_set(spec, 800, rng);
  Model m(4, 16);
  for (int round = 0; round < 40; ++round) m = local_train(m, train, {0.5, 5.0, 5, 32}, rng);
  EXPECT_GT(evaluate(m, test).accuracy, 0.9);
}

TEST(PerturbTest, ZeroSigmaIsIdentity) {
  Rng rng(15);
  const Model m = RandomModel(4, 16, 1.0, rng);
  EXPECT_EQ(perturb(m, 0.0, rng), m);
  EXPECT_THROW(perturb(m, -1.0, rng), std::invalid_argument);
}

TEST(PerturbTest, EmpiricalStdMatches) {
  Rng rng(16);
  const Model zero(1000, 999);  // 10^6 parameters
  const double sigma = 0.37;
  const Model noisy = perturb(zero, sigma, rng);
  double sq = 0.0;
  for (double v : noisy.params) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / noisy.param_count()), sigma, 0.01 * sigma);
  EXPECT_NE(noisy, zero);
}

TEST(AggregateTest, Examples) {
  Rng rng(17);
  const Model a = RandomModel(3, 4, 1.0, rng);
  const Model b = RandomModel(3, 4, 1.0, rng);
  const std::vector<Model> one = {a};
  EXPECT_EQ(aggregate(one, std::vector<double>{5.0}), a);

  const std::vector<Model> two = {a, b};
  const Model avg = aggregate(two, std::vector<double>{10.0, 10.0});
  const Model mix = aggregate(two, std::vector<double>{100.0, 300.0});
  for (std::size_t k = 0; k < a.param_count(); ++k) {
    EXPECT_NEAR(avg.params[k], 0.5 * (a.params[k] + b.params[k]), 1e-15);
    EXPECT_NEAR(mix.params[k], 0.25 * a.params[k] + 0.75 * b.params[k], 1e-15);
  }
  EXPECT_THROW(aggregate(std::vector<Model>{}, std::vector<double>{}), std::invalid_argument);
}

TEST(AggregateTest, FixedPointAndConvexity) {
  Rng rng(18);
  std::uniform_real_distribution<double> size_d(1.0, 1000.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t count = 1 + rng() % 6;
    std::vector<double> sizes(count);
    for (double& s : sizes) s = size_d(rng);

    const Model w = RandomModel(4, 8, 2.0, rng);
    const std::vector<Model> same(count, w);
    EXPECT_EQ(aggregate(same, sizes), w);

    std::vector<Model> models;
    for (std::size_t i = 0; i < count; ++i) models.push_back(RandomModel(4, 8, 2.0, rng));
    const Model out = aggregate(models, sizes);
    for (std::size_t k = 0; k < out.param_count(); ++k) {
      double lo = models[0].params[k];
      double hi = lo;
      for (const Model& m : models) {
        lo = std::min(lo, m.params[k]);
        hi = std::max(hi, m.params[k]);
      }
      EXPECT_GE(out.params[k], lo);
      EXPECT_LE(out.params[k], hi);
    }
  }
}

TEST(EvaluateTest, ChanceLevelAtRandomInit) {
  Rng rng(19);
  const Dataset test = make_test_set(BlobSpec{}, 4000, rng);
  double acc = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Evaluation ev = evaluate(RandomModel(4, 16, 0.01, rng), test);
    EXPECT_GE(ev.loss, 0.0);
    acc += ev.accuracy / 200.0;
  }
  EXPECT_NEAR(acc, 0.25, 0.05);
}

TEST(ModelSizeTest, Examples) {
  Model m;
  m.params.assign(1000, 0.0);
  EXPECT_EQ(model_size_bits(m), 32000.0);
  EXPECT_EQ(model_size_bits(Model()), 0.0);
  // W is classes x dim plus one bias per class.
  EXPECT_EQ(model_size_bits(Model(4, 32)) - 32.0 * 4,
            2.0 * (model_size_bits(Model(4, 16)) - 32.0 * 4));
}

}  // namespace
}  // namespace fedsched::fl
