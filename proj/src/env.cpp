#include "fedsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedsched::env {

void ChannelParams::Validate(std::size_t clients, std::size_t channels) const {
  if (!(uplink_bandwidth_hz > 0.0) || !(downlink_bandwidth_hz > 0.0)) {
    throw std::invalid_argument("ChannelParams: bandwidths must be positive");
  }
  if (!(fading_shape > 0.0)) {
    throw std::invalid_argument("ChannelParams: fading shape must be positive");
  }
  for (const Matrix* m : {&uplink_interference_var, &downlink_interference_var}) {
    if (m->rows() != clients || m->cols() != channels) {
      throw std::invalid_argument("ChannelParams: interference matrix must be " +
                                  std::to_string(clients) + "x" +
                                  std::to_string(channels));
    }
    for (double v : m->data()) {
      if (!(v >= 0.0)) {
        throw std::invalid_argument("ChannelParams: negative interference variance");
      }
    }
  }
}

double Topology::Distance(std::size_t client) const {
  const Position& p = clients.at(client);
  return std::hypot(p.x - bs.x, p.y - bs.y);
}

void Topology::Validate() const {
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const Position& p = clients[i];
    if (p.x < 0.0 || p.y < 0.0 || p.x > side_m || p.y > side_m) {
      throw std::invalid_argument("Topology: client outside the service square");
    }
    if (!(Distance(i) > 0.0)) {
      throw std::invalid_argument("Topology: client co-located with the base station");
    }
  }
}

void ClientComputeProfile::Validate() const {
  if (!(cycles_per_sample > 0.0) || !(dataset_size > 0.0)) {
    throw std::invalid_argument("ClientComputeProfile: cycles and dataset size must be positive");
  }
  if (!(cpu_lo_hz > 0.0) || !(cpu_lo_hz <= cpu_hi_hz)) {
    throw std::invalid_argument("ClientComputeProfile: need 0 < f_lo <= f_hi");
  }
}

double DbmToWatts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double path_loss_db(double distance_m) {
  if (!(distance_m > 0.0)) {
    throw std::invalid_argument("path_loss_db: distance must be positive");
  }
  return 128.1 + 37.6 * std::log10(distance_m / 1000.0);
}

double link_rate(double tx_power_dbm, double gain_linear, double interference_w,
                 double noise_w, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) {
    throw std::invalid_argument("link_rate: bandwidth must be positive");
  }
  if (interference_w < 0.0 || noise_w < 0.0 || gain_linear < 0.0) {
    throw std::invalid_argument("link_rate: negative gain, interference or noise");
  }
  const double denom = interference_w + noise_w;
  if (!(denom > 0.0)) {
    throw std::invalid_argument("link_rate: interference plus noise is zero");
  }
  const double sinr = DbmToWatts(tx_power_dbm) * gain_linear / denom;
  return bandwidth_hz * std::log2(1.0 + sinr);
}

double transmission_delay(double model_bits, double rate_bps) {
  if (!(model_bits > 0.0)) {
    throw std::invalid_argument("transmission_delay: model size must be positive");
  }
  if (!(rate_bps > 0.0)) return kInfiniteDelay;
  return model_bits / rate_bps;
}

double compute_delay(double tau, double dataset_size, double cycles_per_sample,
                     double cpu_hz) {
  if (!(tau > 0.0) || !(dataset_size > 0.0) || !(cycles_per_sample > 0.0) ||
      !(cpu_hz > 0.0)) {
    throw std::invalid_argument("compute_delay: all inputs must be positive");
  }
  return tau * dataset_size * cycles_per_sample / cpu_hz;
}

Topology MakeTopology(std::size_t clients, double side_m, Rng& rng) {
  Topology topo;
  topo.side_m = side_m;
  topo.bs = {side_m / 2.0, side_m / 2.0};
  topo.clients.reserve(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    Position p;
    do {
      p = {Uniform01(rng) * side_m, Uniform01(rng) * side_m};
    } while (std::hypot(p.x - topo.bs.x, p.y - topo.bs.y) < 1.0);
    topo.clients.push_back(p);
  }
  return topo;
}

RoundEnvironment sample_round(const ChannelParams& params, const Topology& topology,
                              std::span<const ClientComputeProfile> profiles, Rng& rng) {
  const std::size_t clients = topology.clients.size();
  const std::size_t channels = params.uplink_interference_var.cols();
  if (profiles.size() != clients) {
    throw std::invalid_argument("sample_round: one compute profile per client required");
  }

  RoundEnvironment env;
  env.gain = Matrix(clients, channels);
  env.interference_up = Matrix(clients, channels);
  env.interference_down = Matrix(clients, channels);
  env.cpu_hz.resize(clients);

  const bool faded = std::isfinite(params.fading_shape);
  std::gamma_distribution<double> fading(faded ? params.fading_shape : 1.0,
                                         faded ? 1.0 / params.fading_shape : 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < clients; ++i) {
    const double mean_gain =
        std::pow(10.0, -path_loss_db(topology.Distance(i)) / 10.0);
    for (std::size_t j = 0; j < channels; ++j) {
      env.gain(i, j) = faded ? mean_gain * fading(rng) : mean_gain;
      const double up = gauss(rng) * std::sqrt(params.uplink_interference_var(i, j));
      const double down = gauss(rng) * std::sqrt(params.downlink_interference_var(i, j));
      env.interference_up(i, j) = up * up;
      env.interference_down(i, j) = down * down;
    }
    const auto& prof = profiles[i];
    env.cpu_hz[i] = prof.cpu_lo_hz + (prof.cpu_hi_hz - prof.cpu_lo_hz) * Uniform01(rng);
  }
  return env;
}

RoundDelays round_delays(const RoundEnvironment& env, const ChannelParams& params,
                         const Assignment& assignment, double model_bits_up,
                         double model_bits_down, std::span<const double> train_delays,
                         double d_max) {
  const std::size_t clients = env.gain.rows();
  if (train_delays.size() != clients) {
    throw std::invalid_argument("round_delays: one training delay per client required");
  }
  const double noise_w = DbmToWatts(params.noise_power_dbm);

  RoundDelays out;
  out.client_delay.assign(clients, kInfiniteDelay);
  out.success.assign(clients, 0);
  for (std::size_t j = 0; j < assignment.num_channels(); ++j) {
    const std::size_t i = assignment.client_on(j);
    const double up_rate =
        link_rate(params.client_tx_power_dbm, env.gain(i, j), env.interference_up(i, j),
                  noise_w, params.uplink_bandwidth_hz);
    const double down_rate =
        link_rate(params.bs_tx_power_dbm, env.gain(i, j), env.interference_down(i, j),
                  noise_w, params.downlink_bandwidth_hz);
    const double d = transmission_delay(model_bits_down, down_rate) +
                     transmission_delay(model_bits_up, up_rate) + train_delays[i];
    out.client_delay[i] = d;
    out.success[i] = d <= d_max ? 1 : 0;
    out.round_delay = std::max(out.round_delay, std::min(d, d_max));
  }
  return out;
}

}  // namespace fedsched::env
