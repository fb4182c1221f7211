#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedsched/matrix.hpp"
#include "fedsched/rng.hpp"

namespace fedsched::fl {

// Row-major feature matrix (size x dim) plus integer class labels.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t k) const {
    return {features.data() + k * dim, dim};
  }
};

// Gaussian blobs with unit covariance; class m is centred at
// separation * e_m, so dim must be at least the number of classes.
struct BlobSpec {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  double separation = 2.5;

  void Validate() const;
};

Dataset SampleBlobs(const BlobSpec& spec, std::span<const int> labels, Rng& rng);

// Class-balanced held-out set.
Dataset make_test_set(const BlobSpec& spec, std::size_t size, Rng& rng);

struct Partition {
  std::vector<Dataset> clients;
  std::size_t num_classes = 0;
  double gamma = 0.0;

  // p_i = |D_i| / |D|.
  std::vector<double> client_weights() const;
  // p_{i,m}, clients x classes.
  Matrix class_ratios() const;
  // q_m over the pooled data.
  std::vector<double> global_class_ratios() const;
};

// Client i gets round(gamma * |D_i|) samples of its dominant class
// (i mod M) and the rest drawn uniformly over all classes.
Partition partition_synthetic(std::size_t num_clients, const BlobSpec& spec,
                              std::span<const std::size_t> sizes, double gamma, Rng& rng);

// Multinomial softmax regression. Parameters are laid out as the
// classes x dim weight matrix (row-major) followed by the bias vector.
struct Model {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> params;

  Model() = default;
  Model(std::size_t classes, std::size_t dim)
      : classes(classes), dim(dim), params(classes * dim + classes, 0.0) {}

  std::size_t param_count() const { return params.size(); }
  double& weight(std::size_t m, std::size_t k) { return params[m * dim + k]; }
  double weight(std::size_t m, std::size_t k) const { return params[m * dim + k]; }
  double& bias(std::size_t m) { return params[classes * dim + m]; }
  double bias(std::size_t m) const { return params[classes * dim + m]; }

  friend bool operator==(const Model&, const Model&) = default;
};

Model RandomModel(std::size_t classes, std::size_t dim, double scale, Rng& rng);

struct TrainConfig {
  double eta = 0.1;
  double clip = 1.0;
  int tau = 5;
  int batch = 10;

  void Validate() const;
};

std::vector<double> Softmax(const Model& model, std::span<const double> x);

// Cross-entropy of one sample.
double sample_loss(const Model& model, std::span<const double> x, int label);

// Closed-form gradient of sample_loss, shaped like the model.
Model sample_gradient(const Model& model, std::span<const double> x, int label);

// Scales g to norm <= clip in place; clip = 0 zeroes it.
void ClipToNorm(std::vector<double>& g, double clip);

// tau mini-batch SGD steps on softmax cross-entropy. Every per-sample
// gradient is clipped to norm C before averaging. Batches are drawn without
// replacement; a batch larger than the dataset uses the whole dataset.
Model local_train(const Model& model, const Dataset& data, const TrainConfig& config, Rng& rng);

// Adds i.i.d. N(0, sigma^2) to every parameter.
Model perturb(const Model& model, double sigma, Rng& rng);

// sum_i (|D_i| / sum |D|) w_i. Throws on an empty list.
Model aggregate(std::span<const Model> models, std::span<const double> sizes);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const Model& model, const Dataset& test_set);

// 32 bits per parameter.
double model_size_bits(const Model& model);

}  // namespace fedsched::fl
