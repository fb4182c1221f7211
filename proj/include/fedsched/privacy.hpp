#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedsched::privacy {

// Raised when eta * lambda_max >= 1, outside the smoothness regime the
// divergence bound is stated for.
class AssumptionViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-3;

  void Validate() const;
  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;
};

// Gaussian-mechanism standard deviation for a tau-step clipped-SGD update:
// sensitivity 2*eta*C*tau/batch, scaled by sqrt(2 ln(1.25/delta))/epsilon.
// epsilon = +inf yields 0.
double noise_std(const PrivacyParams& params, double eta, double clip, int tau, int batch);

// Composed leakage after `uploads` releases:
// sqrt(E ln(1/delta) / ln(2/delta)) * epsilon.
double compose_leakage(const PrivacyParams& params, std::int64_t uploads);

struct DivergenceInputs {
  std::vector<double> client_class_ratios;  // p_{i,m}
  std::vector<double> global_class_ratios;  // q_m
  double eta = 0.1;
  double clip = 1.0;
  double lambda_max = 1.0;
  int tau = 1;
  int batch = 1;
  double sampling_rate = 1.0;  // batch / |D_i|

  void Validate() const;
};

// Upper bound on the expected distance between a client's noisy upload and
// the centrally trained model after tau local steps.
double divergence_bound(const DivergenceInputs& inputs, const PrivacyParams& params);

// Substituted for a zero divergence before inversion.
inline constexpr double kThetaFloor = 1e-12;

// beta_i = min(N * (1/theta_i) / sum_u(1/theta_u), 1).
std::vector<double> participating_ratios(std::span<const double> thetas, std::size_t channels);

// Per-client privacy bookkeeping across rounds.
class PrivacyLedger {
 public:
  PrivacyLedger(std::vector<PrivacyParams> params, std::vector<double> noise_stds);

  // E_i += indicator_i, then recompute the composed leakage.
  void record_upload(std::span<const int> indicators);

  std::size_t size() const { return params_.size(); }
  const PrivacyParams& params(std::size_t i) const { return params_.at(i); }
  double noise_std(std::size_t i) const { return noise_stds_.at(i); }
  std::int64_t uploads(std::size_t i) const { return uploads_.at(i); }
  double leakage(std::size_t i) const { return leakage_.at(i); }
  const std::vector<double>& leakages() const { return leakage_; }

 private:
  std::vector<PrivacyParams> params_;
  std::vector<double> noise_stds_;
  std::vector<std::int64_t> uploads_;
  std::vector<double> leakage_;
};

}  // namespace fedsched::privacy
