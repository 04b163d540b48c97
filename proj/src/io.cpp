#include "jle/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <unistd.h>

#include "jle/errors.hpp"

#include "json.hpp"

namespace jle {

namespace {

// All artifacts are written little-endian regardless of host order. The
// helpers below byte-swap on big-endian hosts and are identity otherwise.

template <typename T>
T to_le(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    T out;
    auto* a = reinterpret_cast<unsigned char*>(&v);
    auto* b = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = a[sizeof(T) - 1 - i];
    return out;
  }
}

struct Writer {
  std::string bytes;

  template <typename T>
  void put(T v) {
    const T le = to_le(v);
    bytes.append(reinterpret_cast<const char*>(&le), sizeof(T));
  }
  void put_doubles(const double* p, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes.append(reinterpret_cast<const char*>(p), count * sizeof(double));
    } else {
      for (std::size_t i = 0; i < count; ++i) put(p[i]);
    }
  }
};

struct Reader {
  const std::string& bytes;
  std::size_t at = 0;
  const std::string& path;

  template <typename T>
  T get() {
    if (at + sizeof(T) > bytes.size())
      throw IoError("'" + path + "' is truncated");
    T v;
    std::memcpy(&v, bytes.data() + at, sizeof(T));
    at += sizeof(T);
    return to_le(v);
  }
  void get_doubles(double* p, std::size_t count) {
    if (at + count * sizeof(double) > bytes.size())
      throw IoError("'" + path + "' is truncated");
    std::memcpy(p, bytes.data() + at, count * sizeof(double));
    at += count * sizeof(double);
    if constexpr (std::endian::native != std::endian::little) {
      for (std::size_t i = 0; i < count; ++i) {
        double v = p[i];
        auto* a = reinterpret_cast<unsigned char*>(&v);
        std::reverse(a, a + sizeof(double));
        p[i] = v;
      }
    }
  }
  void expect_magic(const char* magic) {
    if (at + 4 > bytes.size() || std::memcmp(bytes.data() + at, magic, 4) != 0)
      throw IoError("'" + path + "' is not a " + magic + " file");
    at += 4;
  }
  void done() {
    if (at != bytes.size())
      throw IoError("'" + path + "' has " + std::to_string(bytes.size() - at) +
                    " unexpected trailing bytes");
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return std::move(ss).str();
}

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagBias = 1u << 0;
constexpr std::uint32_t kFlagScales = 1u << 1;

}  // namespace

void atomic_write_file(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  const fs::path tmp = dir / (target.filename().string() + ".tmp." +
                              std::to_string(static_cast<unsigned long>(::getpid())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failure on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename temporary into '" + path + "'");
  }
}

void save_matrix(const EmbeddingMatrix& m, const std::string& path) {
  Writer w;
  w.bytes.append("JLEM", 4);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.num_classes));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.embed_dim));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.kind));
  w.put<std::uint64_t>(m.seed);
  w.put_doubles(m.data.data(), m.data.size());
  atomic_write_file(path, w.bytes);
}

EmbeddingMatrix load_matrix(const std::string& path) {
  const std::string bytes = slurp(path);
  Reader r{bytes, 0, path};
  r.expect_magic("JLEM");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw IoError("'" + path + "' has unsupported version " + std::to_string(version));
  EmbeddingMatrix m;
  m.num_classes = static_cast<std::int64_t>(r.get<std::uint64_t>());
  m.embed_dim = static_cast<std::int64_t>(r.get<std::uint64_t>());
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw IoError("'" + path + "' has unknown matrix kind " + std::to_string(kind));
  m.kind = static_cast<MatrixKind>(kind);
  m.seed = r.get<std::uint64_t>();
  if (m.num_classes < 1 || m.embed_dim < 1)
    throw IoError("'" + path + "' declares an empty matrix");
  m.data.resize(static_cast<std::size_t>(m.num_classes) * static_cast<std::size_t>(m.embed_dim));
  r.get_doubles(m.data.data(), m.data.size());
  r.done();
  return m;
}

void save_model(const LinearModel& m, const std::string& path) {
  Writer w;
  w.bytes.append("JLLM", 4);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.num_features));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.num_outputs));
  std::uint32_t flags = 0;
  if (!m.bias.empty()) flags |= kFlagBias;
  if (!m.feature_scale.empty()) flags |= kFlagScales;
  w.put<std::uint32_t>(flags);
  w.put<double>(m.lambda1);
  w.put<double>(m.lambda2);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.sweeps_run));
  w.put_doubles(m.weights.data(), m.weights.size());
  if (!m.bias.empty()) w.put_doubles(m.bias.data(), m.bias.size());
  if (!m.feature_scale.empty()) w.put_doubles(m.feature_scale.data(), m.feature_scale.size());
  atomic_write_file(path, w.bytes);
}

LinearModel load_model(const std::string& path) {
  const std::string bytes = slurp(path);
  Reader r{bytes, 0, path};
  r.expect_magic("JLLM");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw IoError("'" + path + "' has unsupported version " + std::to_string(version));
  LinearModel m;
  m.num_features = static_cast<std::int64_t>(r.get<std::uint64_t>());
  m.num_outputs = static_cast<std::int64_t>(r.get<std::uint64_t>());
  const auto flags = r.get<std::uint32_t>();
  if (flags & ~(kFlagBias | kFlagScales))
    throw IoError("'" + path + "' has unknown flag bits");
  m.lambda1 = r.get<double>();
  m.lambda2 = r.get<double>();
  m.sweeps_run = static_cast<std::int64_t>(r.get<std::uint64_t>());
  if (m.num_features < 0 || m.num_outputs < 1)
    throw IoError("'" + path + "' declares an empty model");
  m.weights.resize(static_cast<std::size_t>(m.num_features) *
                   static_cast<std::size_t>(m.num_outputs));
  r.get_doubles(m.weights.data(), m.weights.size());
  if (flags & kFlagBias) {
    m.bias.resize(static_cast<std::size_t>(m.num_outputs));
    r.get_doubles(m.bias.data(), m.bias.size());
  }
  if (flags & kFlagScales) {
    m.feature_scale.resize(static_cast<std::size_t>(m.num_features));
    r.get_doubles(m.feature_scale.data(), m.feature_scale.size());
  }
  r.done();
  return m;
}

std::string matrix_json(const EmbeddingMatrix& m) {
  nlohmann::json j;
  j["classes"] = m.num_classes;
  j["embed_dim"] = m.embed_dim;
  j["kind"] = kind_name(m.kind);
  j["seed"] = m.seed;
  j["data"] = m.data;  // column-major, as stored
  return j.dump(2) + "\n";
}

std::string model_json(const LinearModel& m) {
  nlohmann::json j;
  j["features"] = m.num_features;
  j["outputs"] = m.num_outputs;
  j["lambda1"] = m.lambda1;
  j["lambda2"] = m.lambda2;
  j["sweeps_run"] = m.sweeps_run;
  j["weights"] = m.weights;  // row-major, as stored
  if (!m.bias.empty()) j["bias"] = m.bias;
  if (!m.feature_scale.empty()) j["feature_scale"] = m.feature_scale;
  return j.dump(2) + "\n";
}

}  // namespace jle
