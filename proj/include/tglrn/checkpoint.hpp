#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tglrn/data.hpp"
#include "tglrn/model.hpp"

// Binary layout, little-endian:
//   "TGLRN\x01"
//   u64 length + bytes   effective configuration text (key = value lines)
//   u64 n, n f64 means, n f64 stds   scaler
//   u64 count, then per parameter:
//     u32 name length + bytes, u32 rank, rank x i64 dims, prod(dims) x f64
namespace tglrn::checkpoint {

inline constexpr char kMagic[6] = {'T', 'G', 'L', 'R', 'N', '\x01'};

struct NamedTensor {
  std::string name;
  diff::Tensor value;
};

struct Checkpoint {
  std::string config_text;
  data::Scaler scaler;
  std::vector<NamedTensor> params;
};

void save(const std::filesystem::path& path, const Model& model, const std::string& config_text,
          const data::Scaler& scaler);

// Throws FormatError on bad magic or truncation.
Checkpoint load(const std::filesystem::path& path);

// Copies parameters into the model. Every name and shape is validated before
// anything is written; FormatError names expected vs. actual on mismatch.
void restore(Model& model, const Checkpoint& ckpt);

}  // namespace tglrn::checkpoint
