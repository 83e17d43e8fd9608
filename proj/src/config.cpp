#include "tglrn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tglrn/error.hpp"

namespace tglrn {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "1", "single source of all randomness"},
      {"learning_rate", "0.005", "Adam step size"},
      {"batch_size", "64", "training windows per update"},
      {"max_epochs", "200", "upper bound on training epochs"},
      {"patience", "15", "epochs without validation improvement before stopping"},
      {"gamma", "0.3", "edge keep probability during training"},
      {"L", "5", "number of hop levels in the structure group"},
      {"d", "16", "edge embedding width"},
      {"m", "16", "hop-selector embedding width"},
      {"D", "64", "hidden width of the spatio-temporal blocks"},
      {"K", "2", "diffusion steps"},
      {"Ks", "2", "temporal kernel width"},
      {"n_blocks", "3", "number of spatio-temporal blocks"},
      {"dropout_rate", "0.1", "dropout after each temporal layer"},
      {"alpha", "1", "target std of normalized edge logits"},
      {"tau", "1", "Gumbel temperature"},
      {"input_len", "12", "history length T'"},
      {"horizon", "12", "forecast length T"},
      {"threads", "1", "worker threads for batch gradients"},
      {"mape_threshold", "1.0", "targets below this magnitude are left out of MAPE"},
      {"scaler", "per_sensor", "z-score statistics: per_sensor or global"},
      {"normalized_loss", "false", "train on z-scored MAE instead of original units"},
      {"eval_sampling_override", "false", "keep edge sampling active at evaluation"},
      {"symmetrize_hops", "false", "hop distances ignore edge direction"},
      {"zero_is_missing", "true", "treat zero readings as missing"},
      {"train_ratio", "0.6", "chronological train fraction"},
      {"val_ratio", "0.2", "chronological validation fraction"},
      {"test_ratio", "0.2", "chronological test fraction"},
      {"edges", "edges.csv", "edge list (from,to)"},
      {"flows", "flow.csv", "flow table (t,s0,...)"},
      {"out_dir", "out", "directory for every artifact"},
      {"checkpoint", "", "checkpoint path (default: <out_dir>/model.ckpt)"},
      {"topology", "chain", "synth: chain, ring or grid"},
      {"nodes", "8", "synth: number of sensors"},
      {"steps", "372", "synth: number of 5-minute steps"},
      {"period", "288", "synth: sinusoid period in steps"},
      {"regime_period", "24", "synth: steps per coupling regime"},
      {"coupling_a", "0.8", "synth: coupling in even regimes"},
      {"coupling_b", "0.0", "synth: coupling in odd regimes"},
      {"noise_std", "0.05", "synth: Gaussian noise std"},
      {"level", "5.0", "synth: baseline flow"},
      {"amplitude", "1.0", "synth: sinusoid amplitude"},
      {"inspect_split", "test", "inspect-graph: split to analyse"},
      {"inspect_window", "0", "inspect-graph: window index dumped in full"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  cfg.merge_text(ss.str(), path.string());
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

}  // namespace

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }
double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& k : config_keys()) os << k.name << " = " << values_.at(k.name) << '\n';
  return os.str();
}

ModelConfig RunConfig::model_config(int nodes) const {
  ModelConfig m;
  m.nodes = nodes;
  m.window = get_int("input_len");
  m.horizon = get_int("horizon");
  m.embed_dim = get_int("d");
  m.hop_embed_dim = get_int("m");
  m.hidden = get_int("D");
  m.levels = get_int("L");
  m.diffusion_steps = get_int("K");
  m.kernel = get_int("Ks");
  m.blocks = get_int("n_blocks");
  m.dropout = get_double("dropout_rate");
  m.alpha = get_double("alpha");
  m.tau = get_double("tau");
  m.gamma = get_double("gamma");
  m.symmetrize_hops = get_bool("symmetrize_hops");
  m.seed = get_u64("seed");
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = get_double("learning_rate");
  t.batch_size = get_int("batch_size");
  t.max_epochs = get_int("max_epochs");
  t.patience = get_int("patience");
  t.seed = get_u64("seed");
  t.threads = get_int("threads");
  t.normalized_loss = get_bool("normalized_loss");
  t.eval_sampling = get_bool("eval_sampling_override");
  t.mape_threshold = get_double("mape_threshold");
  return t;
}

EvalOptions RunConfig::eval_options() const {
  return EvalOptions{get_double("mape_threshold"), get_bool("eval_sampling_override"), get_u64("seed")};
}

data::SynthConfig RunConfig::synth_config() const {
  data::SynthConfig s;
  s.nodes = get_int("nodes");
  s.steps = get_int("steps");
  s.topology = data::parse_topology(get("topology"));
  s.period = get_int("period");
  s.regime_period = get_int("regime_period");
  s.coupling_a = get_double("coupling_a");
  s.coupling_b = get_double("coupling_b");
  s.noise_std = get_double("noise_std");
  s.level = get_double("level");
  s.amplitude = get_double("amplitude");
  s.seed = get_u64("seed");
  return s;
}

data::SplitRatios RunConfig::split_ratios() const {
  return {get_double("train_ratio"), get_double("val_ratio"), get_double("test_ratio")};
}

data::ScalerMode RunConfig::scaler_mode() const {
  const auto& v = get("scaler");
  if (v == "per_sensor") return data::ScalerMode::kPerSensor;
  if (v == "global") return data::ScalerMode::kGlobal;
  throw ConfigError("config key 'scaler': expected per_sensor or global, got '" + v + "'");
}

data::LoadOptions RunConfig::load_options() const { return {get_bool("zero_is_missing")}; }

std::filesystem::path RunConfig::checkpoint_path() const {
  const auto& c = get("checkpoint");
  return c.empty() ? out_dir() / "model.ckpt" : std::filesystem::path(c);
}

}  // namespace tglrn
