#include "fedsched/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fedsched/bandit.hpp"
#include "fedsched/env.hpp"
#include "fedsched/fl.hpp"
#include "fedsched/privacy.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double DrawOracleReward(double mean, const ExperimentConfig& config, Rng& rng) {
  if (config.oracle_noise == OracleNoise::kBernoulli) return Uniform01(rng) < mean ? 1.0 : 0.0;
  if (config.oracle_noise_std == 0.0) return mean;
  std::normal_distribution<double> gauss(mean, config.oracle_noise_std);
  // Truncated to [0, 1] by rejection.
  while (true) {
    const double r = gauss(rng);
    if (r >= 0.0 && r <= 1.0) return r;
  }
}

struct PhysicalWorld {
  env::ChannelParams channel;
  env::Topology topology;
  std::vector<env::ClientComputeProfile> profiles;
};

PhysicalWorld BuildWorld(const ExperimentConfig& c, std::span<const std::size_t> sizes) {
  PhysicalWorld w;
  Rng topo_rng = DeriveRng(c.seed, Stream::kTopology);
  w.topology = env::MakeTopology(c.clients, c.side_m, topo_rng);

  w.channel.uplink_bandwidth_hz = c.uplink_bandwidth_hz;
  w.channel.downlink_bandwidth_hz = c.downlink_bandwidth_hz;
  w.channel.client_tx_power_dbm = c.client_tx_power_dbm;
  w.channel.bs_tx_power_dbm = c.bs_tx_power_dbm;
  w.channel.noise_power_dbm = c.noise_power_dbm;
  w.channel.fading_shape = c.fading_shape;
  w.channel.uplink_interference_var = Matrix(c.clients, c.channels);
  w.channel.downlink_interference_var = Matrix(c.clients, c.channels);
  Rng scenario_rng = DeriveRng(c.seed, Stream::kScenario);
  for (std::size_t i = 0; i < c.clients; ++i) {
    for (std::size_t j = 0; j < c.channels; ++j) {
      const double up = c.interference_up_dbm_lo +
                        (c.interference_up_dbm_hi - c.interference_up_dbm_lo) * Uniform01(scenario_rng);
      const double down =
          c.interference_down_dbm_lo +
          (c.interference_down_dbm_hi - c.interference_down_dbm_lo) * Uniform01(scenario_rng);
      w.channel.uplink_interference_var(i, j) = env::DbmToWatts(up);
      w.channel.downlink_interference_var(i, j) = env::DbmToWatts(down);
    }
  }
  w.channel.Validate(c.clients, c.channels);

  for (std::size_t i = 0; i < c.clients; ++i) {
    const double index = static_cast<double>(i + 1);
    env::ClientComputeProfile p;
    p.client_index = i;
    p.cycles_per_sample = c.cycles_per_sample;
    p.dataset_size = static_cast<double>(sizes[i]);
    p.cpu_lo_hz = c.cpu_lo_step_hz * index + c.cpu_lo_base_hz;
    p.cpu_hi_hz = c.cpu_hi_step_hz * index + c.cpu_hi_base_hz;
    p.Validate();
    w.profiles.push_back(p);
  }
  return w;
}

}  // namespace

double ExperimentResult::MaxQueue() const {
  double q = 0.0;
  for (const auto& r : rounds)
    for (double v : r.queues) q = std::max(q, v);
  return q;
}

Matrix PlantedOracleMeans(std::size_t clients, std::size_t channels, Rng& rng) {
  const Assignment planted = random_assignment(clients, channels, rng);
  Matrix mu(clients, channels);
  for (std::size_t i = 0; i < clients; ++i)
    for (std::size_t j = 0; j < channels; ++j) mu(i, j) = 0.05 + 0.4 * Uniform01(rng);
  for (std::size_t j = 0; j < channels; ++j) {
    mu(planted.client_on(j), j) = 0.75 + 0.2 * Uniform01(rng);
  }
  return mu;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.Validate();
  const std::size_t U = config.clients;
  const std::size_t N = config.channels;

  ExperimentResult result;
  result.config = config;

  // Data, partition and test set.
  Rng data_rng = DeriveRng(config.seed, Stream::kData);
  std::vector<std::size_t> sizes(U);
  {
    std::uniform_int_distribution<std::size_t> size_dist(config.dataset_size_min,
                                                         config.dataset_size_max);
    for (auto& s : sizes) s = size_dist(data_rng);
  }
  const fl::BlobSpec blobs{config.num_classes, config.feature_dim, config.class_separation};
  const fl::Partition partition = fl::partition_synthetic(U, blobs, sizes, config.gamma, data_rng);
  const fl::Dataset test_set = fl::make_test_set(blobs, config.test_size, data_rng);

  // Privacy calibration and participating ratios.
  const auto privacy_params = config.PrivacyParamsPerClient();
  const Matrix class_ratios = partition.class_ratios();
  const std::vector<double> global_ratios = partition.global_class_ratios();
  for (std::size_t i = 0; i < U; ++i) {
    privacy::DivergenceInputs in;
    in.client_class_ratios.assign(class_ratios.data().begin() + i * config.num_classes,
                                  class_ratios.data().begin() + (i + 1) * config.num_classes);
    in.global_class_ratios = global_ratios;
    in.eta = config.eta;
    in.clip = config.clip;
    in.lambda_max = config.lambda_max;
    in.tau = config.tau;
    in.batch = config.batch;
    in.sampling_rate = static_cast<double>(config.batch) / static_cast<double>(sizes[i]);
    result.thetas.push_back(privacy::divergence_bound(in, privacy_params[i]));
    result.noise_stds.push_back(privacy::noise_std(privacy_params[i], config.eta, config.clip,
                                                   config.tau, config.batch));
  }
  result.betas = config.fixed_beta ? std::vector<double>(U, *config.fixed_beta)
                                   : privacy::participating_ratios(result.thetas, N);
  const double beta_total = std::accumulate(result.betas.begin(), result.betas.end(), 0.0);
  if (beta_total > static_cast<double>(N) + 1e-9) {
    result.warnings.push_back("sum of participating ratios " + std::to_string(beta_total) +
                              " exceeds the channel count; queue stability is not guaranteed");
  }
  privacy::PrivacyLedger ledger(privacy_params, result.noise_stds);

  // Environment.
  std::optional<PhysicalWorld> world;
  if (config.environment == EnvironmentMode::kPhysical) {
    world = BuildWorld(config, sizes);
  } else {
    if (config.oracle_mu) {
      result.oracle_mu = Matrix::FromRows(*config.oracle_mu);
    } else {
      Rng plant_rng = DeriveRng(config.seed, Stream::kOracle, 0);
      result.oracle_mu = PlantedOracleMeans(U, N, plant_rng);
    }
  }

  Rng init_rng = DeriveRng(config.seed, Stream::kModelInit);
  fl::Model global = fl::RandomModel(config.num_classes, config.feature_dim, 0.01, init_rng);
  const double model_bits = fl::model_size_bits(global);
  const fl::TrainConfig train{config.eta, config.clip, config.tau, config.batch};

  Rng env_rng = DeriveRng(config.seed, Stream::kEnvironment);
  Rng oracle_rng = DeriveRng(config.seed, Stream::kOracle, 1);
  Rng sched_rng = DeriveRng(config.seed, Stream::kScheduler);
  std::vector<Rng> train_rngs;
  std::vector<Rng> noise_rngs;
  for (std::size_t i = 0; i < U; ++i) {
    train_rngs.push_back(DeriveRng(config.seed, Stream::kTraining, i));
    noise_rngs.push_back(DeriveRng(config.seed, Stream::kNoise, i));
  }

  bandit::BanditState state(U, N);
  bandit::Scheduler scheduler(config.Scheduler());
  std::vector<int> previous_indicators(U, 0);
  std::vector<double> successes(U, 0.0);
  std::vector<double> train_delays(U, 0.0);
  double cum_delay = 0.0;
  fl::Evaluation last_eval{kNaN, kNaN};
  if (config.learning) last_eval = fl::evaluate(global, test_set);

  result.rounds.reserve(static_cast<std::size_t>(config.rounds));
  for (std::int64_t t = 0; t < config.rounds; ++t) {
    state.set_round(t);
    if (t > 0) state.update_queues(result.betas, previous_indicators);

    RoundMetrics m;
    m.t = t;
    m.queues = state.queues();
    m.assignment = scheduler.Next(state, sched_rng);

    std::vector<double> rewards(U, 0.0);
    std::vector<int> indicators(U, 0);
    double delay = 0.0;
    if (world) {
      const env::RoundEnvironment round_env =
          env::sample_round(world->channel, world->topology, world->profiles, env_rng);
      for (std::size_t i = 0; i < U; ++i) {
        train_delays[i] = env::compute_delay(config.tau, static_cast<double>(sizes[i]),
                                             config.cycles_per_sample, round_env.cpu_hz[i]);
      }
      const env::RoundDelays rd = env::round_delays(round_env, world->channel, m.assignment,
                                                    model_bits, model_bits, train_delays,
                                                    config.d_max);
      for (std::size_t j = 0; j < N; ++j) {
        const std::size_t i = m.assignment.client_on(j);
        rewards[i] = bandit::reward(rd.client_delay[i], config.d_max);
      }
      indicators = rd.success;
      delay = rd.round_delay;
    } else {
      for (std::size_t j = 0; j < N; ++j) {
        const std::size_t i = m.assignment.client_on(j);
        rewards[i] = DrawOracleReward((*result.oracle_mu)(i, j), config, oracle_rng);
        indicators[i] = 1;
        delay = std::max(delay, (1.0 - rewards[i]) * config.d_max);
      }
    }

    m.min_reward = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) {
      m.min_reward = std::min(m.min_reward, rewards[m.assignment.client_on(j)]);
    }

    if (config.learning) {
      std::vector<fl::Model> uploads;
      std::vector<double> weights;
      for (std::size_t j = 0; j < N; ++j) {
        const std::size_t i = m.assignment.client_on(j);
        if (!indicators[i]) continue;
        fl::Model local = fl::local_train(global, partition.clients[i], train, train_rngs[i]);
        uploads.push_back(fl::perturb(local, result.noise_stds[i], noise_rngs[i]));
        weights.push_back(static_cast<double>(sizes[i]));
      }
      // A round with no punctual upload leaves the global model as it was.
      if (!uploads.empty()) global = fl::aggregate(uploads, weights);
      if (t % config.eval_every == 0 || t + 1 == config.rounds) {
        last_eval = fl::evaluate(global, test_set);
      }
    }
    m.accuracy = last_eval.accuracy;
    m.loss = last_eval.loss;

    ledger.record_upload(indicators);
    state.observe(m.assignment, rewards);

    cum_delay += delay;
    m.delay_s = delay;
    m.cum_delay_s = cum_delay;
    m.selection_fraction.resize(U);
    for (std::size_t i = 0; i < U; ++i) {
      successes[i] += indicators[i];
      m.selection_fraction[i] = successes[i] / static_cast<double>(t + 1);
    }
    m.eps_bar = ledger.leakages();
    m.indicators = indicators;
    previous_indicators = indicators;
    result.rounds.push_back(std::move(m));
  }
  return result;
}

RegretReport compute_regret(std::span<const RoundMetrics> rounds, const Matrix& mu) {
  RegretReport report;
  const MatchingResult best = brute_force_optimal(mu);
  report.mu_star = best.value;
  report.a_star = best.assignment;

  double runner_up = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  ForEachAssignment(mu.rows(), mu.cols(), [&](const Assignment& a) {
    const double v = min_matched_edge(mu, a);
    worst = std::min(worst, v);
    if (!(a == best.assignment)) runner_up = std::max(runner_up, v);
  });
  // A single valid assignment (U = N = 1) has no competitor.
  report.delta_min = std::isfinite(runner_up) ? best.value - runner_up : 0.0;
  report.delta_max = best.value - worst;

  double total = 0.0;
  report.per_round.reserve(rounds.size());
  report.cumulative.reserve(rounds.size());
  for (const auto& r : rounds) {
    const double regret = best.value - min_matched_edge(mu, r.assignment);
    total += regret;
    report.per_round.push_back(regret);
    report.cumulative.push_back(total);
  }
  return report;
}

std::optional<double> theorem4_bound(double delta_min, double delta_max, double q_max,
                                     double precision, double V, std::size_t clients,
                                     std::size_t channels, std::int64_t rounds) {
  const double gap = delta_min - q_max - precision;
  if (!(gap > 0.0) || rounds < 1) return std::nullopt;
  const double U = static_cast<double>(clients);
  const double N = static_cast<double>(channels);
  return delta_max * (4.0 * V * V * N * (U + 2.0) * std::log(static_cast<double>(rounds)) /
                          (gap * gap) +
                      (2.0 * U + 1.0) * N);
}

RegretReport RegretFor(const ExperimentResult& result, double precision) {
  if (!result.oracle_mu) {
    throw std::invalid_argument(
        "regret needs the oracle-stationary environment; physical means are unknown");
  }
  RegretReport report = compute_regret(result.rounds, *result.oracle_mu);
  report.q_max = result.MaxQueue();
  report.precision = precision;
  report.bound = theorem4_bound(report.delta_min, report.delta_max, report.q_max, precision,
                                result.config.V, result.config.clients, result.config.channels,
                                static_cast<std::int64_t>(result.rounds.size()));
  return report;
}

std::vector<std::string> CsvHeader(std::size_t clients) {
  std::vector<std::string> cols = {"t", "delay_s", "cum_delay_s", "min_reward", "accuracy", "loss"};
  for (const char* prefix : {"q_", "sel_frac_", "eps_bar_"}) {
    for (std::size_t i = 1; i <= clients; ++i) cols.push_back(prefix + std::to_string(i));
  }
  return cols;
}

namespace {

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void EnsureParent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

void WriteCsv(const ExperimentResult& result, const std::string& path) {
  EnsureParent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const auto header = CsvHeader(result.config.clients);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& r : result.rounds) {
    out << r.t << ',' << FormatDouble(r.delay_s) << ',' << FormatDouble(r.cum_delay_s) << ','
        << FormatDouble(r.min_reward) << ',' << FormatDouble(r.accuracy) << ','
        << FormatDouble(r.loss);
    for (const auto* series : {&r.queues, &r.selection_fraction, &r.eps_bar}) {
      for (double v : *series) out << ',' << FormatDouble(v);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

nlohmann::json SummaryJson(const ExperimentResult& result,
                           const std::optional<RegretReport>& regret) {
  using nlohmann::json;
  json doc;
  doc["config"] = ToJson(result.config);
  doc["thetas"] = result.thetas;
  doc["betas"] = result.betas;
  doc["noise_stds"] = result.noise_stds;
  doc["warnings"] = result.warnings;
  if (!result.rounds.empty()) {
    const RoundMetrics& last = result.rounds.back();
    doc["final"] = {
        {"t", last.t},
        {"cum_delay_s", last.cum_delay_s},
        {"accuracy", std::isnan(last.accuracy) ? json(nullptr) : json(last.accuracy)},
        {"loss", std::isnan(last.loss) ? json(nullptr) : json(last.loss)},
        {"queues", last.queues},
        {"selection_fraction", last.selection_fraction},
        {"eps_bar", last.eps_bar},
        {"max_queue", result.MaxQueue()},
    };
  }
  if (regret) {
    doc["regret"] = {
        {"mu_star", regret->mu_star},
        {"a_star", regret->a_star.client_of_channel()},
        {"delta_min", regret->delta_min},
        {"delta_max", regret->delta_max},
        {"q_max", regret->q_max},
        {"precision", regret->precision},
        {"cumulative_regret", regret->cumulative.empty() ? 0.0 : regret->cumulative.back()},
        {"bound", regret->bound ? json(*regret->bound) : json("inapplicable")},
    };
  } else {
    doc["regret"] = nullptr;
  }
  return doc;
}

void WriteSummaryJson(const ExperimentResult& result, const std::optional<RegretReport>& regret,
                      const std::string& path) {
  EnsureParent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << SummaryJson(result, regret).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void emit(const ExperimentResult& result, const std::optional<RegretReport>& regret,
          const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  WriteCsv(result, (base / "metrics.csv").string());
  WriteSummaryJson(result, regret, (base / "summary.json").string());
}

}  // namespace fedsched
