#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tglrn/data.hpp"
#include "tglrn/model.hpp"
#include "tglrn/trainer.hpp"

namespace tglrn {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// Every recognised key with its default, in echo order.
const std::vector<ConfigKey>& config_keys();

// Flat `key = value` configuration. Lines starting with `#` are comments;
// unknown keys are rejected with ConfigError.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void merge_text(const std::string& text, const std::string& origin);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  // Effective configuration, one `key = value` line per key.
  std::string to_text() const;

  ModelConfig model_config(int nodes) const;
  TrainConfig train_config() const;
  EvalOptions eval_options() const;
  data::SynthConfig synth_config() const;
  data::SplitRatios split_ratios() const;
  data::ScalerMode scaler_mode() const;
  data::LoadOptions load_options() const;

  std::filesystem::path out_dir() const { return get("out_dir"); }
  std::filesystem::path checkpoint_path() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tglrn
