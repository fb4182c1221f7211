#include "fedsched/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace fedsched {
namespace {

using nlohmann::json;

std::string DpSchemeName(DpScheme s) { return s == DpScheme::kUniform ? "uniform" : "non-uniform"; }

std::string OracleNoiseName(OracleNoise n) {
  return n == OracleNoise::kBernoulli ? "bernoulli" : "gaussian";
}

// Reads `key` into `out` when present, wrapping type errors in ConfigError.
template <typename T>
void Read(const json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string EnvironmentName(EnvironmentMode mode) {
  return mode == EnvironmentMode::kPhysical ? "physical" : "oracle-stationary";
}

void ExperimentConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (channels < 1 || clients < channels) fail("need clients >= channels >= 1");
  if (rounds < 1) fail("rounds must be >= 1");
  if (!(d_max > 0.0)) fail("d_max must be positive");
  if (!(V >= 0.0)) fail("V must be >= 0");
  if (!(T0 > 0.0)) fail("T0 must be positive");
  if (!(single_ucb_c >= 0.0)) fail("single_ucb_c must be >= 0");
  if (tau < 1 || batch < 1) fail("tau and batch must be >= 1");
  if (!(eta > 0.0) || !(clip > 0.0)) fail("eta and clip must be positive");
  if (!(lambda_max >= 0.0) || eta * lambda_max >= 1.0) fail("need eta * lambda_max < 1");
  if (num_classes < 2 || feature_dim < num_classes) fail("need 2 <= num_classes <= feature_dim");
  if (!(class_separation > 0.0)) fail("class_separation must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (dataset_size_min < 1 || dataset_size_max < dataset_size_min) {
    fail("need 1 <= dataset_size_min <= dataset_size_max");
  }
  if (static_cast<std::size_t>(batch) > dataset_size_min) fail("batch exceeds smallest dataset");
  if (test_size < 1) fail("test_size must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0, 1)");
  if (fixed_beta && !(*fixed_beta >= 0.0 && *fixed_beta <= 1.0)) fail("fixed_beta in [0, 1]");
  if (!(side_m > 0.0)) fail("side_m must be positive");
  if (!(uplink_bandwidth_hz > 0.0) || !(downlink_bandwidth_hz > 0.0)) {
    fail("bandwidths must be positive");
  }
  if (!(fading_shape > 0.0)) fail("fading_shape must be positive");
  if (interference_up_dbm_hi < interference_up_dbm_lo ||
      interference_down_dbm_hi < interference_down_dbm_lo) {
    fail("interference ranges must satisfy lo <= hi");
  }
  if (!(cycles_per_sample > 0.0)) fail("cycles_per_sample must be positive");
  for (std::size_t i = 1; i <= clients; ++i) {
    const double lo = cpu_lo_step_hz * i + cpu_lo_base_hz;
    const double hi = cpu_hi_step_hz * i + cpu_hi_base_hz;
    if (!(lo > 0.0) || hi < lo) fail("cpu frequency ranges must satisfy 0 < lo <= hi");
  }
  if (oracle_mu) {
    if (oracle_mu->size() != clients) fail("oracle_mu must have one row per client");
    for (const auto& row : *oracle_mu) {
      if (row.size() != channels) fail("oracle_mu rows must have one entry per channel");
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) fail("oracle_mu entries must lie in [0, 1]");
      }
    }
  }
  if (!(oracle_noise_std >= 0.0)) fail("oracle_noise_std must be >= 0");
}

std::vector<privacy::PrivacyParams> ExperimentConfig::PrivacyParamsPerClient() const {
  std::vector<privacy::PrivacyParams> out(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    out[i].delta = delta;
    out[i].epsilon =
        dp_scheme == DpScheme::kUniform ? epsilon : 5.0 * (static_cast<double>(i / 2) + 3.0);
  }
  return out;
}

bandit::SchedulerConfig ExperimentConfig::Scheduler() const {
  return {.V = V, .T0 = T0, .policy = policy, .single_ucb_c = single_ucb_c};
}

ExperimentConfig DefaultPreset() { return ExperimentConfig{}; }

ExperimentConfig OraclePreset() {
  ExperimentConfig c;
  c.environment = EnvironmentMode::kOracleStationary;
  c.learning = false;
  c.fixed_beta = 0.0;
  c.rounds = 20000;
  return c;
}

nlohmann::json ToJson(const ExperimentConfig& c) {
  json j = {
      {"clients", c.clients},
      {"channels", c.channels},
      {"rounds", c.rounds},
      {"seed", c.seed},
      {"d_max", c.d_max},
      {"policy", bandit::PolicyName(c.policy)},
      {"V", c.V},
      {"T0", c.T0},
      {"single_ucb_c", c.single_ucb_c},
      {"learning", c.learning},
      {"tau", c.tau},
      {"eta", c.eta},
      {"clip", c.clip},
      {"batch", c.batch},
      {"lambda_max", c.lambda_max},
      {"num_classes", c.num_classes},
      {"feature_dim", c.feature_dim},
      {"class_separation", c.class_separation},
      {"gamma", c.gamma},
      {"dataset_size_min", c.dataset_size_min},
      {"dataset_size_max", c.dataset_size_max},
      {"test_size", c.test_size},
      {"eval_every", c.eval_every},
      {"dp_scheme", DpSchemeName(c.dp_scheme)},
      {"epsilon", c.epsilon},
      {"delta", c.delta},
      {"fixed_beta", c.fixed_beta ? json(*c.fixed_beta) : json(nullptr)},
      {"environment", EnvironmentName(c.environment)},
      {"side_m", c.side_m},
      {"uplink_bandwidth_hz", c.uplink_bandwidth_hz},
      {"downlink_bandwidth_hz", c.downlink_bandwidth_hz},
      {"client_tx_power_dbm", c.client_tx_power_dbm},
      {"bs_tx_power_dbm", c.bs_tx_power_dbm},
      {"noise_power_dbm", c.noise_power_dbm},
      {"fading_shape", c.fading_shape},
      {"interference_up_dbm_lo", c.interference_up_dbm_lo},
      {"interference_up_dbm_hi", c.interference_up_dbm_hi},
      {"interference_down_dbm_lo", c.interference_down_dbm_lo},
      {"interference_down_dbm_hi", c.interference_down_dbm_hi},
      {"cycles_per_sample", c.cycles_per_sample},
      {"cpu_lo_base_hz", c.cpu_lo_base_hz},
      {"cpu_lo_step_hz", c.cpu_lo_step_hz},
      {"cpu_hi_base_hz", c.cpu_hi_base_hz},
      {"cpu_hi_step_hz", c.cpu_hi_step_hz},
      {"oracle_mu", c.oracle_mu ? json(*c.oracle_mu) : json(nullptr)},
      {"oracle_noise", OracleNoiseName(c.oracle_noise)},
      {"oracle_noise_std", c.oracle_noise_std},
  };
  return j;
}

ExperimentConfig ConfigFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const json defaults = ToJson(ExperimentConfig{});
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : doc.items()) {
    if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }

  ExperimentConfig c;
  Read(doc, "clients", c.clients);
  Read(doc, "channels", c.channels);
  Read(doc, "rounds", c.rounds);
  Read(doc, "seed", c.seed);
  Read(doc, "d_max", c.d_max);
  if (doc.contains("policy")) {
    std::string name;
    Read(doc, "policy", name);
    try {
      c.policy = bandit::ParsePolicy(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  Read(doc, "V", c.V);
  Read(doc, "T0", c.T0);
  Read(doc, "single_ucb_c", c.single_ucb_c);
  Read(doc, "learning", c.learning);
  Read(doc, "tau", c.tau);
  Read(doc, "eta", c.eta);
  Read(doc, "clip", c.clip);
  Read(doc, "batch", c.batch);
  Read(doc, "lambda_max", c.lambda_max);
  Read(doc, "num_classes", c.num_classes);
  Read(doc, "feature_dim", c.feature_dim);
  Read(doc, "class_separation", c.class_separation);
  Read(doc, "gamma", c.gamma);
  Read(doc, "dataset_size_min", c.dataset_size_min);
  Read(doc, "dataset_size_max", c.dataset_size_max);
  Read(doc, "test_size", c.test_size);
  Read(doc, "eval_every", c.eval_every);
  if (doc.contains("dp_scheme")) {
    std::string name;
    Read(doc, "dp_scheme", name);
    if (name == "uniform") {
      c.dp_scheme = DpScheme::kUniform;
    } else if (name == "non-uniform") {
      c.dp_scheme = DpScheme::kNonUniform;
    } else {
      throw ConfigError("dp_scheme must be 'uniform' or 'non-uniform'");
    }
  }
  Read(doc, "epsilon", c.epsilon);
  Read(doc, "delta", c.delta);
  if (doc.contains("fixed_beta") && !doc.at("fixed_beta").is_null()) {
    double b = 0.0;
    Read(doc, "fixed_beta", b);
    c.fixed_beta = b;
  }
  if (doc.contains("environment")) {
    std::string name;
    Read(doc, "environment", name);
    if (name == "physical") {
      c.environment = EnvironmentMode::kPhysical;
    } else if (name == "oracle-stationary") {
      c.environment = EnvironmentMode::kOracleStationary;
    } else {
      throw ConfigError("environment must be 'physical' or 'oracle-stationary'");
    }
  }
  Read(doc, "side_m", c.side_m);
  Read(doc, "uplink_bandwidth_hz", c.uplink_bandwidth_hz);
  Read(doc, "downlink_bandwidth_hz", c.downlink_bandwidth_hz);
  Read(doc, "client_tx_power_dbm", c.client_tx_power_dbm);
  Read(doc, "bs_tx_power_dbm", c.bs_tx_power_dbm);
  Read(doc, "noise_power_dbm", c.noise_power_dbm);
  Read(doc, "fading_shape", c.fading_shape);
  Read(doc, "interference_up_dbm_lo", c.interference_up_dbm_lo);
  Read(doc, "interference_up_dbm_hi", c.interference_up_dbm_hi);
  Read(doc, "interference_down_dbm_lo", c.interference_down_dbm_lo);
  Read(doc, "interference_down_dbm_hi", c.interference_down_dbm_hi);
  Read(doc, "cycles_per_sample", c.cycles_per_sample);
  Read(doc, "cpu_lo_base_hz", c.cpu_lo_base_hz);
  Read(doc, "cpu_lo_step_hz", c.cpu_lo_step_hz);
  Read(doc, "cpu_hi_base_hz", c.cpu_hi_base_hz);
  Read(doc, "cpu_hi_step_hz", c.cpu_hi_step_hz);
  if (doc.contains("oracle_mu") && !doc.at("oracle_mu").is_null()) {
    std::vector<std::vector<double>> mu;
    Read(doc, "oracle_mu", mu);
    c.oracle_mu = std::move(mu);
  }
  if (doc.contains("oracle_noise")) {
    std::string name;
    Read(doc, "oracle_noise", name);
    if (name == "bernoulli") {
      c.oracle_noise = OracleNoise::kBernoulli;
    } else if (name == "gaussian") {
      c.oracle_noise = OracleNoise::kGaussian;
    } else {
      throw ConfigError("oracle_noise must be 'bernoulli' or 'gaussian'");
    }
  }
  Read(doc, "oracle_noise_std", c.oracle_noise_std);
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return ConfigFromJson(doc);
}

}  // namespace fedsched
