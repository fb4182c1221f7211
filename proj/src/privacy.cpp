#include "fedsched/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fedsched::privacy {

void PrivacyParams::Validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("privacy: epsilon must be positive");
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("privacy: delta must lie in (0, 1)");
  }
}

double noise_std(const PrivacyParams& params, double eta, double clip, int tau, int batch) {
  params.Validate();
  if (!(eta >= 0.0) || !(clip >= 0.0) || tau < 1 || batch < 1) {
    throw std::invalid_argument("noise_std: need eta, C >= 0, tau >= 1, batch >= 1");
  }
  const double sensitivity = 2.0 * eta * clip * tau / batch;
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / params.delta)) / params.epsilon;
}

double compose_leakage(const PrivacyParams& params, std::int64_t uploads) {
  params.Validate();
  if (uploads < 0) throw std::invalid_argument("compose_leakage: negative upload count");
  if (uploads == 0) return 0.0;
  const double ratio = std::log(1.0 / params.delta) / std::log(2.0 / params.delta);
  return std::sqrt(static_cast<double>(uploads) * ratio) * params.epsilon;
}

void DivergenceInputs::Validate() const {
  if (client_class_ratios.empty() ||
      client_class_ratios.size() != global_class_ratios.size()) {
    throw std::invalid_argument("divergence: class ratio vectors must match and be nonempty");
  }
  for (const auto* ratios : {&client_class_ratios, &global_class_ratios}) {
    double total = 0.0;
    for (double r : *ratios) {
      if (!(r >= 0.0)) throw std::invalid_argument("divergence: negative class ratio");
      total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("divergence: class ratios must sum to 1");
    }
  }
  if (!(eta > 0.0) || !(clip >= 0.0) || !(lambda_max >= 0.0) || tau < 1 || batch < 1 ||
      !(sampling_rate > 0.0)) {
    throw std::invalid_argument("divergence: invalid training hyperparameters");
  }
  if (eta * lambda_max >= 1.0) {
    throw AssumptionViolation("divergence: eta * lambda_max must be < 1");
  }
}

double divergence_bound(const DivergenceInputs& in, const PrivacyParams& params) {
  params.Validate();
  in.Validate();

  double heterogeneity = 0.0;
  for (std::size_t m = 0; m < in.client_class_ratios.size(); ++m) {
    heterogeneity += std::abs(in.client_class_ratios[m] - in.global_class_ratios[m]);
  }
  const double noise_term = 4.0 * in.eta * in.clip * in.sampling_rate *
                            std::sqrt(2.0 * in.tau * std::log(1.0 / params.delta)) /
                            (std::sqrt(std::numbers::pi) * in.batch * params.epsilon);
  const double per_step = in.eta * in.clip * heterogeneity + noise_term;

  double growth = 0.0;
  double factor = 1.0;
  for (int j = 0; j < in.tau; ++j) {
    growth += factor;
    factor *= 1.0 + in.eta * in.lambda_max;
  }
  return growth * per_step;
}

std::vector<double> participating_ratios(std::span<const double> thetas, std::size_t channels) {
  if (thetas.empty()) return {};
  std::vector<double> inverse(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] >= 0.0)) {
      throw std::invalid_argument("participating_ratios: negative divergence");
    }
    inverse[i] = 1.0 / std::max(thetas[i], kThetaFloor);
  }
  double total = 0.0;
  for (double v : inverse) total += v;

  std::vector<double> beta(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    beta[i] = std::min(static_cast<double>(channels) * inverse[i] / total, 1.0);
  }
  return beta;
}

PrivacyLedger::PrivacyLedger(std::vector<PrivacyParams> params, std::vector<double> noise_stds)
    : params_(std::move(params)),
      noise_stds_(std::move(noise_stds)),
      uploads_(params_.size(), 0),
      leakage_(params_.size(), 0.0) {
  if (noise_stds_.size() != params_.size()) {
    throw std::invalid_argument("PrivacyLedger: one noise std per client required");
  }
  for (const auto& p : params_) p.Validate();
}

void PrivacyLedger::record_upload(std::span<const int> indicators) {
  if (indicators.size() != params_.size()) {
    throw std::invalid_argument("record_upload: one indicator per client required");
  }
  for (std::size_t i = 0; i < indicators.size(); ++i) {
    if (indicators[i] == 0) continue;
    ++uploads_[i];
    leakage_[i] = compose_leakage(params_[i], uploads_[i]);
  }
}

}  // namespace fedsched::privacy
