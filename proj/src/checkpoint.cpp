#include "tglrn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tglrn/error.hpp"

namespace tglrn::checkpoint {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw InputError("cannot write checkpoint " + path.string());
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw InputError("checkpoint write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open checkpoint " + path.string());
  }
  template <typename T>
  T pod(const char* what) {
    T v{};
    bytes(&v, sizeof(T), what);
    return v;
  }
  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError(path_.string() + ": truncated checkpoint while reading " + what);
  }
  // Guards against absurd lengths from corrupt headers.
  std::uint64_t length(const char* what, std::uint64_t limit) {
    const auto n = pod<std::uint64_t>(what);
    if (n > limit) throw FormatError(path_.string() + ": implausible " + std::string(what) + " length");
    return n;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

void save(const std::filesystem::path& path, const Model& model, const std::string& config_text,
          const data::Scaler& scaler) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<std::uint64_t>(config_text.size());
  w.bytes(config_text.data(), config_text.size());
  const auto n = static_cast<std::uint64_t>(scaler.nodes());
  w.pod(n);
  w.bytes(scaler.mean().data(), n * sizeof(double));
  w.bytes(scaler.stddev().data(), n * sizeof(double));
  const auto& params = model.params();
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(params.size()));
  for (diff::ParamId id = 0; id < params.size(); ++id) {
    const auto& p = params[id];
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    const auto& shape = p.value.shape();
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
    for (auto dim : shape) w.pod<std::int64_t>(dim);
    w.bytes(p.value.values().data(), p.value.values().size() * sizeof(double));
  }
  w.finish();
}

Checkpoint load(const std::filesystem::path& path) {
  Reader r(path);
  char magic[sizeof(kMagic)];
  r.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a checkpoint (bad magic or unsupported version)");
  Checkpoint ckpt;
  ckpt.config_text.resize(r.length("config", 1u << 24));
  r.bytes(ckpt.config_text.data(), ckpt.config_text.size(), "config");
  const auto n = r.length("scaler", 1u << 24);
  Eigen::RowVectorXd mean(static_cast<Eigen::Index>(n)), sd(static_cast<Eigen::Index>(n));
  r.bytes(mean.data(), n * sizeof(double), "scaler");
  r.bytes(sd.data(), n * sizeof(double), "scaler");
  ckpt.scaler = data::Scaler(std::move(mean), std::move(sd));
  const auto count = r.length("parameter table", 1u << 20);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = r.pod<std::uint32_t>("parameter name");
    if (name_len > 4096) throw FormatError(path.string() + ": implausible parameter name length");
    t.name.resize(name_len);
    r.bytes(t.name.data(), name_len, "parameter name");
    const auto rank = r.pod<std::uint32_t>("parameter rank");
    if (rank == 0 || rank > 8) throw FormatError(path.string() + ": bad rank for " + t.name);
    diff::Shape shape(rank);
    for (auto& dim : shape) {
      dim = r.pod<std::int64_t>("parameter shape");
      if (dim <= 0 || dim > (1 << 26)) throw FormatError(path.string() + ": bad dimension for " + t.name);
    }
    std::vector<double> values(static_cast<std::size_t>(diff::shape_size(shape)));
    r.bytes(values.data(), values.size() * sizeof(double), "parameter payload");
    t.value = diff::Tensor(std::move(shape), std::move(values));
    ckpt.params.push_back(std::move(t));
  }
  if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes after parameter table");
  return ckpt;
}

void restore(Model& model, const Checkpoint& ckpt) {
  auto& params = model.params();
  if (static_cast<int>(ckpt.params.size()) != params.size())
    throw FormatError("checkpoint has " + std::to_string(ckpt.params.size()) + " parameters, model expects " +
                      std::to_string(params.size()));
  for (diff::ParamId id = 0; id < params.size(); ++id) {
    const auto& expected = params[id];
    const auto& actual = ckpt.params[static_cast<std::size_t>(id)];
    if (actual.name != expected.name)
      throw FormatError("checkpoint parameter " + std::to_string(id) + ": expected '" + expected.name + "', found '" +
                        actual.name + "'");
    if (actual.value.shape() != expected.value.shape())
      throw FormatError("checkpoint parameter '" + expected.name + "': expected shape " +
                        diff::shape_string(expected.value.shape()) + ", found " +
                        diff::shape_string(actual.value.shape()));
  }
  if (ckpt.scaler.nodes() != model.config().nodes)
    throw FormatError("checkpoint scaler covers " + std::to_string(ckpt.scaler.nodes()) + " sensors, model expects " +
                      std::to_string(model.config().nodes));
  for (diff::ParamId id = 0; id < params.size(); ++id) params[id].value = ckpt.params[static_cast<std::size_t>(id)].value;
}

}  // namespace tglrn::checkpoint
