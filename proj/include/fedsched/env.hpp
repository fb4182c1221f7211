#pragma once

#include <limits>
#include <span>
#include <vector>

#include "fedsched/matching.hpp"
#include "fedsched/matrix.hpp"
#include "fedsched/rng.hpp"

namespace fedsched::env {

// Returned by transmission_delay when the link rate is zero. Compares
// greater than any finite d_max.
inline constexpr double kInfiniteDelay = std::numeric_limits<double>::infinity();

struct ChannelParams {
  double uplink_bandwidth_hz = 15e3;
  double downlink_bandwidth_hz = 15e3;
  double client_tx_power_dbm = 23.0;
  double bs_tx_power_dbm = 23.0;
  double noise_power_dbm = -107.0;
  // Shape m of the unit-mean Gamma (Nakagami-m power) fading draw.
  // m = 1 is exponential (Rayleigh) fading; m = +inf disables fading.
  double fading_shape = 1.0;
  // Mean interference power (W) per (client, channel). The per-round
  // interference is the square of a zero-mean Gaussian with this variance.
  Matrix uplink_interference_var;
  Matrix downlink_interference_var;

  void Validate(std::size_t clients, std::size_t channels) const;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Topology {
  Position bs;
  std::vector<Position> clients;
  double side_m = 2000.0;

  double Distance(std::size_t client) const;
  void Validate() const;
};

struct ClientComputeProfile {
  std::size_t client_index = 0;
  double cycles_per_sample = 1.0;
  double dataset_size = 1.0;
  double cpu_lo_hz = 1.0;
  double cpu_hi_hz = 1.0;

  void Validate() const;
};

struct RoundEnvironment {
  Matrix gain;                // linear power gain, clients x channels
  Matrix interference_up;     // W
  Matrix interference_down;   // W
  std::vector<double> cpu_hz;
};

struct RoundDelays {
  // Per-client total delay d_{i,j}; kInfiniteDelay for unmatched clients.
  std::vector<double> client_delay;
  // 1 iff matched and delay <= d_max.
  std::vector<int> success;
  // max over matched clients of min(d_{i,j}, d_max).
  double round_delay = 0.0;
};

double DbmToWatts(double dbm);

double path_loss_db(double distance_m);

double link_rate(double tx_power_dbm, double gain_linear, double interference_w,
                 double noise_w, double bandwidth_hz);

double transmission_delay(double model_bits, double rate_bps);

double compute_delay(double tau, double dataset_size, double cycles_per_sample,
                     double cpu_hz);

// Clients uniform in the square [0, side]^2, base station at the centre.
Topology MakeTopology(std::size_t clients, double side_m, Rng& rng);

RoundEnvironment sample_round(const ChannelParams& params, const Topology& topology,
                              std::span<const ClientComputeProfile> profiles, Rng& rng);

RoundDelays round_delays(const RoundEnvironment& env, const ChannelParams& params,
                         const Assignment& assignment, double model_bits_up,
                         double model_bits_down, std::span<const double> train_delays,
                         double d_max);

}  // namespace fedsched::env
