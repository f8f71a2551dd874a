#include "hfcov/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hfcov {

namespace {

using nlohmann::json;

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T, class Parse>
void read_enum_list(const json& j, const char* key, std::vector<T>& out, Parse parse) {
  if (!j.contains(key)) return;
  std::vector<std::string> names;
  read(j, key, names);
  out.clear();
  for (const auto& s : names) out.push_back(parse(s));
}

const std::set<std::string> kSimKeys{"p",   "n",     "kappa0",         "noise_level", "noise_multiplier",
                                     "theta", "rho", "vol_model", "sync_mode",   "seed",
                                     "repetition"};

SimConfig sim_from(const json& j) {
  reject_unknown(j, kSimKeys);
  SimConfig c;
  read(j, "p", c.p);
  read(j, "n", c.n);
  read(j, "kappa0", c.kappa0);
  if (j.contains("noise_level")) c.noise_level = parse_noise_level(j.at("noise_level").get<std::string>());
  if (j.contains("noise_multiplier")) {
    double v = 0.0;
    read(j, "noise_multiplier", v);
    c.noise_multiplier_override = v;
  }
  read(j, "theta", c.theta);
  read(j, "rho", c.rho);
  if (j.contains("vol_model")) c.vol_model_override = parse_vol_model(j.at("vol_model").get<std::string>());
  if (j.contains("sync_mode")) c.sync_mode = parse_sync_mode(j.at("sync_mode").get<std::string>());
  read(j, "seed", c.seed);
  read(j, "repetition", c.repetition);
  return c;
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
  const SimConfig c = sim_from(parse_object(json_text));
  (void)c.resolved();
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const json j = parse_object(json_text);
  reject_unknown(j, {"p", "n", "kappa0_grid", "noise_levels", "K_list", "sync_modes", "repetitions", "estimators",
                     "b_grid", "a_grid", "theta", "seed", "workers"});
  ExperimentConfig c;
  read(j, "p", c.p);
  read(j, "n", c.n);
  read(j, "kappa0_grid", c.kappa0_grid);
  read_enum_list(j, "noise_levels", c.noise_levels, parse_noise_level);
  read(j, "K_list", c.K_list);
  read_enum_list(j, "sync_modes", c.sync_modes, parse_sync_mode);
  read(j, "repetitions", c.repetitions);
  read_enum_list(j, "estimators", c.estimators, parse_estimator);
  read(j, "b_grid", c.b_grid);
  read(j, "a_grid", c.a_grid);
  read(j, "theta", c.theta);
  read(j, "seed", c.seed);
  read(j, "workers", c.workers);
  c.validate();
  return c;
}

ConvergenceSpec parse_convergence_spec(const std::string& json_text) {
  const json j = parse_object(json_text);
  reject_unknown(j, {"n_list", "K_rule", "reps_per_n", "target_slope", "noise", "noiseless", "model", "seed",
                     "workers"});
  ConvergenceSpec s;
  read(j, "n_list", s.n_list);
  if (j.contains("K_rule")) {
    const auto rule = j.at("K_rule").get<std::string>();
    if (rule == "n_two_thirds") s.K_rule = KRule::n_two_thirds;
    else if (rule == "n_one_third") s.K_rule = KRule::n_one_third;
    else throw ConfigError("unknown K_rule '" + rule + "'");
  }
  read(j, "reps_per_n", s.reps_per_n);
  read(j, "target_slope", s.target_slope);
  if (j.contains("noise")) s.noise = parse_noise_level(j.at("noise").get<std::string>());
  read(j, "noiseless", s.noiseless);
  if (j.contains("model")) s.model = parse_vol_model(j.at("model").get<std::string>());
  read(j, "seed", s.seed);
  read(j, "workers", s.workers);
  s.validate();
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_sim_config(const SimConfig& config) {
  json j;
  j["p"] = config.p;
  j["n"] = config.n;
  j["kappa0"] = config.kappa0;
  j["noise_level"] = std::string(to_string(config.noise_level));
  if (config.noise_multiplier_override) j["noise_multiplier"] = *config.noise_multiplier_override;
  if (!config.theta.empty()) j["theta"] = config.theta;
  if (!config.rho.empty()) j["rho"] = config.rho;
  if (config.vol_model_override) j["vol_model"] = std::string(to_string(*config.vol_model_override));
  j["sync_mode"] = std::string(to_string(config.sync_mode));
  j["seed"] = config.seed;
  j["repetition"] = config.repetition;
  return j.dump(2);
}

}  // namespace hfcov
