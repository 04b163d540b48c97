#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "jle/embedding.hpp"
#include "jle/errors.hpp"
#include "jle/io.hpp"
#include "jle/regress.hpp"
#include "jle/rng.hpp"
#include "json.hpp"

using namespace jle;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() / ("jle_io_test_" + std::to_string(getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

LinearModel sample_model(bool with_bias, bool with_scale) {
  LinearModel m;
  m.num_features = 7;
  m.num_outputs = 3;
  m.lambda1 = 0.25;
  m.lambda2 = 1.5;
  m.sweeps_run = 12;
  const CounterRng rng{99};
  m.weights.resize(21);
  for (std::size_t k = 0; k < m.weights.size(); ++k) m.weights[k] = rng.gaussian(k);
  if (with_bias) m.bias = {0.5, -0.125, 3.0};
  if (with_scale) m.feature_scale = {1, 0.5, 2, 1, 0.25, 1, 8};
  return m;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("matrix artifacts round-trip bit for bit") {
  TempDir dir;
  for (MatrixKind kind : {MatrixKind::gaussian, MatrixKind::rademacher}) {
    const EmbeddingMatrix m = sample_matrix(9, 33, kind, 1234567);
    const std::string path = dir.file("m.bin");
    save_matrix(m, path);

    const std::string bytes = read_all(path);
    CHECK(bytes.substr(0, 4) == "JLEM");

    const EmbeddingMatrix back = load_matrix(path);
    CHECK(back.num_classes == m.num_classes);
    CHECK(back.embed_dim == m.embed_dim);
    CHECK(back.kind == m.kind);
    CHECK(back.seed == m.seed);
    CHECK(back.data == m.data);
  }
}

TEST_CASE("model artifacts round-trip with and without extras") {
  TempDir dir;
  for (bool bias : {false, true})
    for (bool scale : {false, true}) {
      const LinearModel m = sample_model(bias, scale);
      const std::string path = dir.file("w.bin");
      save_model(m, path);
      CHECK(read_all(path).substr(0, 4) == "JLLM");

      const LinearModel back = load_model(path);
      CHECK(back.num_features == m.num_features);
      CHECK(back.num_outputs == m.num_outputs);
      CHECK(back.weights == m.weights);
      CHECK(back.bias == m.bias);
      CHECK(back.feature_scale == m.feature_scale);
      CHECK(back.lambda1 == m.lambda1);
      CHECK(back.lambda2 == m.lambda2);
      CHECK(back.sweeps_run == m.sweeps_run);
    }
}

TEST_CASE("saving twice is idempotent and leaves no temp files behind") {
  TempDir dir;
  const EmbeddingMatrix m = sample_matrix(4, 8, MatrixKind::rademacher, 5);
  const std::string path = dir.file("m.bin");
  save_matrix(m, path);
  const std::string first = read_all(path);
  save_matrix(m, path);
  CHECK(read_all(path) == first);

  std::size_t entries = 0;
  for (const auto& ent : fs::directory_iterator(dir.path)) {
    (void)ent;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("corrupt artifacts are rejected with IoError") {
  TempDir dir;
  const EmbeddingMatrix m = sample_matrix(6, 16, MatrixKind::gaussian, 8);
  const std::string path = dir.file("m.bin");
  save_matrix(m, path);
  const std::string good = read_all(path);

  // Truncated payload.
  write_all(path, good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_matrix(path), IoError);

  // Bad magic.
  std::string magic = good;
  magic[0] = 'X';
  write_all(path, magic);
  CHECK_THROWS_AS(load_matrix(path), IoError);

  // Unknown version.
  std::string version = good;
  version[4] = 9;
  write_all(path, version);
  CHECK_THROWS_AS(load_matrix(path), IoError);

  // Missing file.
  CHECK_THROWS_AS(load_matrix(dir.file("nope.bin")), IoError);

  const LinearModel model = sample_model(true, false);
  const std::string mpath = dir.file("w.bin");
  save_model(model, mpath);
  const std::string mbytes = read_all(mpath);
  write_all(mpath, mbytes.substr(0, 24));
  try {
    load_model(mpath);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }

  // A matrix file is not a model file.
  save_matrix(m, path);
  CHECK_THROWS_AS(load_model(path), IoError);
}

TEST_CASE("json debug exports mirror the artifacts") {
  const EmbeddingMatrix m = sample_matrix(3, 4, MatrixKind::rademacher, 77);
  const nlohmann::json jm = nlohmann::json::parse(matrix_json(m));
  CHECK(jm["classes"] == 3);
  CHECK(jm["embed_dim"] == 4);
  CHECK(jm["kind"] == "rademacher");
  CHECK(jm["seed"] == 77);
  CHECK(jm["data"].size() == 12);
  CHECK(jm["data"][0].get<double>() == m.data[0]);

  const LinearModel model = sample_model(true, true);
  const nlohmann::json jw = nlohmann::json::parse(model_json(model));
  CHECK(jw["features"] == 7);
  CHECK(jw["outputs"] == 3);
  CHECK(jw["weights"].size() == 21);
  CHECK(jw["bias"].size() == 3);
  CHECK(jw["feature_scale"].size() == 7);
}

TEST_CASE("atomic_write_file replaces content in one step") {
  TempDir dir;
  const std::string path = dir.file("doc.txt");
  atomic_write_file(path, "first");
  CHECK(read_all(path) == "first");
  atomic_write_file(path, "second, longer payload");
  CHECK(read_all(path) == "second, longer payload");
  std::size_t entries = 0;
  for (const auto& ent : fs::directory_iterator(dir.path)) {
    (void)ent;
    ++entries;
  }
  CHECK(entries == 1);
}
