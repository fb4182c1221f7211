#include "fedsched/fl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedsched::fl {

void BlobSpec::Validate() const {
  if (num_classes < 2) throw std::invalid_argument("blobs: need at least two classes");
  if (dim < num_classes) throw std::invalid_argument("blobs: dim must be >= number of classes");
  if (!(separation > 0.0)) throw std::invalid_argument("blobs: separation must be positive");
}

Dataset SampleBlobs(const BlobSpec& spec, std::span<const int> labels, Rng& rng) {
  spec.Validate();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset out;
  out.dim = spec.dim;
  out.labels.assign(labels.begin(), labels.end());
  out.features.resize(labels.size() * spec.dim);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    double* x = out.features.data() + k * spec.dim;
    for (std::size_t d = 0; d < spec.dim; ++d) x[d] = gauss(rng);
    x[labels[k]] += spec.separation;
  }
  return out;
}

Dataset make_test_set(const BlobSpec& spec, std::size_t size, Rng& rng) {
  std::vector<int> labels(size);
  for (std::size_t k = 0; k < size; ++k) labels[k] = static_cast<int>(k % spec.num_classes);
  return SampleBlobs(spec, labels, rng);
}

std::vector<double> Partition::client_weights() const {
  double total = 0.0;
  for (const auto& c : clients) total += static_cast<double>(c.size());
  std::vector<double> p;
  p.reserve(clients.size());
  for (const auto& c : clients) p.push_back(static_cast<double>(c.size()) / total);
  return p;
}

Matrix Partition::class_ratios() const {
  Matrix r(clients.size(), num_classes);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    for (int y : clients[i].labels) r(i, static_cast<std::size_t>(y)) += 1.0;
    for (std::size_t m = 0; m < num_classes; ++m) {
      r(i, m) /= static_cast<double>(clients[i].size());
    }
  }
  return r;
}

std::vector<double> Partition::global_class_ratios() const {
  std::vector<double> q(num_classes, 0.0);
  double total = 0.0;
  for (const auto& c : clients) {
    for (int y : c.labels) q[static_cast<std::size_t>(y)] += 1.0;
    total += static_cast<double>(c.size());
  }
  for (double& v : q) v /= total;
  return q;
}

Partition partition_synthetic(std::size_t num_clients, const BlobSpec& spec,
                              std::span<const std::size_t> sizes, double gamma, Rng& rng) {
  spec.Validate();
  if (sizes.size() != num_clients) {
    throw std::invalid_argument("partition: one dataset size per client required");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("partition: gamma in [0, 1]");

  Partition part;
  part.num_classes = spec.num_classes;
  part.gamma = gamma;
  std::uniform_int_distribution<int> any_class(0, static_cast<int>(spec.num_classes) - 1);
  for (std::size_t i = 0; i < num_clients; ++i) {
    if (sizes[i] == 0) throw std::invalid_argument("partition: dataset sizes must be positive");
    const int dominant = static_cast<int>(i % spec.num_classes);
    const auto n_dominant = static_cast<std::size_t>(std::lround(gamma * sizes[i]));
    std::vector<int> labels(sizes[i]);
    for (std::size_t k = 0; k < sizes[i]; ++k) {
      labels[k] = k < n_dominant ? dominant : any_class(rng);
    }
    part.clients.push_back(SampleBlobs(spec, labels, rng));
  }
  return part;
}

Model RandomModel(std::size_t classes, std::size_t dim, double scale, Rng& rng) {
  Model m(classes, dim);
  std::normal_distribution<double> gauss(0.0, scale);
  for (double& p : m.params) p = gauss(rng);
  return m;
}

void TrainConfig::Validate() const {
  if (!(eta >= 0.0) || !(clip >= 0.0) || tau < 1 || batch < 1) {
    throw std::invalid_argument("train config: need eta, C >= 0, tau >= 1, batch >= 1");
  }
}

std::vector<double> Softmax(const Model& model, std::span<const double> x) {
  std::vector<double> z(model.classes);
  for (std::size_t m = 0; m < model.classes; ++m) {
    double acc = model.bias(m);
    for (std::size_t k = 0; k < model.dim; ++k) acc += model.weight(m, k) * x[k];
    z[m] = acc;
  }
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

double sample_loss(const Model& model, std::span<const double> x, int label) {
  // log-sum-exp form keeps the loss finite for confident wrong predictions.
  std::vector<double> z(model.classes);
  for (std::size_t m = 0; m < model.classes; ++m) {
    double acc = model.bias(m);
    for (std::size_t k = 0; k < model.dim; ++k) acc += model.weight(m, k) * x[k];
    z[m] = acc;
  }
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - peak);
  return peak + std::log(total) - z[static_cast<std::size_t>(label)];
}

Model sample_gradient(const Model& model, std::span<const double> x, int label) {
  Model g(model.classes, model.dim);
  const std::vector<double> p = Softmax(model, x);
  for (std::size_t m = 0; m < model.classes; ++m) {
    const double err = p[m] - (static_cast<int>(m) == label ? 1.0 : 0.0);
    for (std::size_t k = 0; k < model.dim; ++k) g.weight(m, k) = err * x[k];
    g.bias(m) = err;
  }
  return g;
}

void ClipToNorm(std::vector<double>& g, double clip) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= clip) return;
  const double scale = clip / norm;
  for (double& v : g) v *= scale;
}

Model local_train(const Model& model, const Dataset& data, const TrainConfig& config, Rng& rng) {
  config.Validate();
  if (data.size() == 0) throw std::invalid_argument("local_train: empty client dataset");
  if (data.dim != model.dim) throw std::invalid_argument("local_train: feature dim mismatch");

  Model w = model;
  std::vector<std::size_t> index(data.size());
  std::iota(index.begin(), index.end(), 0);
  const std::size_t batch = std::min<std::size_t>(config.batch, data.size());
  std::vector<double> step(w.param_count());

  for (int s = 0; s < config.tau; ++s) {
    for (std::size_t k = 0; k < batch; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, index.size() - 1);
      std::swap(index[k], index[pick(rng)]);
    }
    std::fill(step.begin(), step.end(), 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t row = index[k];
      Model g = sample_gradient(w, data.row(row), data.labels[row]);
      ClipToNorm(g.params, config.clip);
      for (std::size_t p = 0; p < step.size(); ++p) step[p] += g.params[p];
    }
    const double scale = config.eta / static_cast<double>(batch);
    for (std::size_t p = 0; p < step.size(); ++p) w.params[p] -= scale * step[p];
  }
  return w;
}

Model perturb(const Model& model, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb: sigma must be >= 0");
  Model out = model;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> gauss(0.0, sigma);
  for (double& p : out.params) p += gauss(rng);
  return out;
}

Model aggregate(std::span<const Model> models, std::span<const double> sizes) {
  if (models.empty()) throw std::invalid_argument("aggregate: no models to aggregate");
  if (sizes.size() != models.size()) {
    throw std::invalid_argument("aggregate: one dataset size per model required");
  }
  double total = 0.0;
  for (double s : sizes) {
    if (!(s > 0.0)) throw std::invalid_argument("aggregate: dataset sizes must be positive");
    total += s;
  }
  if (models.size() == 1) return models.front();

  Model out(models.front().classes, models.front().dim);
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].param_count() != out.param_count()) {
      throw std::invalid_argument("aggregate: model shapes differ");
    }
    const double p = sizes[i] / total;
    for (std::size_t k = 0; k < out.param_count(); ++k) out.params[k] += p * models[i].params[k];
  }
  // The exact weighted mean lies in the coordinate-wise hull of the inputs;
  // clamp away rounding so that holds bit-for-bit (and equal inputs return
  // unchanged).
  for (std::size_t k = 0; k < out.param_count(); ++k) {
    double lo = models.front().params[k];
    double hi = lo;
    for (const Model& m : models) {
      lo = std::min(lo, m.params[k]);
      hi = std::max(hi, m.params[k]);
    }
    out.params[k] = std::clamp(out.params[k], lo, hi);
  }
  return out;
}

Evaluation evaluate(const Model& model, const Dataset& test_set) {
  if (test_set.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  Evaluation ev;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < test_set.size(); ++k) {
    const auto x = test_set.row(k);
    const std::vector<double> p = Softmax(model, x);
    const auto best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (best == test_set.labels[k]) ++correct;
    ev.loss += sample_loss(model, x, test_set.labels[k]);
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  ev.loss /= static_cast<double>(test_set.size());
  return ev;
}

double model_size_bits(const Model& model) {
  return 32.0 * static_cast<double>(model.param_count());
}

}  // namespace fedsched::fl
