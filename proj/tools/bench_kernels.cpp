// Times each OpenMP kernel against its serial reference implementation and
// checks that the two routes agree. Numbers are informational; the agreement
// column is the part that must never say "no".

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "jle/dataio.hpp"
#include "jle/decode.hpp"
#include "jle/embedding.hpp"
#include "jle/ref.hpp"
#include "jle/regress.hpp"
#include "jle/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_s(Fn&& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void row(const char* name, double serial_s, double parallel_s, bool agree) {
  std::printf("%-18s %10.4f %12.4f %9.2fx   %s\n", name, serial_s, parallel_s,
              parallel_s > 0 ? serial_s / parallel_s : 0.0, agree ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
  std::printf("%-18s %10s %12s %10s   %s\n", "kernel", "serial_s", "parallel_s", "speedup",
              "agree");

  int failures = 0;

  {
    const jle::EmbeddingMatrix m =
        jle::sample_matrix(512, 256, jle::MatrixKind::rademacher, 7);
    double serial_worst = 0;
    const double s1 = time_s([&] { serial_worst = jle::ref::max_gram_distortion(m); });
    jle::JlpReport rep;
    const double s2 = time_s([&] { rep = jle::verify_jlp(m, 1.0); });
    const bool ok = std::abs(serial_worst - rep.epsilon_observed) < 1e-12;
    row("gram_distortion", s1, s2, ok);
    failures += !ok;
  }

  {
    const jle::EmbeddingMatrix m =
        jle::sample_matrix(512, 256, jle::MatrixKind::gaussian, 11);
    const std::int64_t Q = 1000;
    const jle::CounterRng rng{99};
    std::vector<double> queries(static_cast<std::size_t>(Q * m.embed_dim));
    for (std::size_t k = 0; k < queries.size(); ++k) queries[k] = rng.gaussian(k);
    std::vector<jle::DecodeResult> serial(static_cast<std::size_t>(Q));
    const double s1 = time_s([&] {
      for (std::int64_t i = 0; i < Q; ++i)
        serial[i] = jle::ref::decode_nearest(
            {queries.data() + i * m.embed_dim, static_cast<std::size_t>(m.embed_dim)}, m);
    });
    std::vector<jle::DecodeResult> parallel;
    const double s2 = time_s([&] { parallel = jle::decode_batch(queries, Q, m); });
    bool ok = true;
    for (std::int64_t i = 0; i < Q; ++i)
      if (serial[i].label != parallel[i].label) ok = false;
    row("decode_batch", s1, s2, ok);
    failures += !ok;
  }

  {
    const jle::SparseDataset d = jle::synth_blobs(64, 1000, 50, 0.1, 3);
    std::ostringstream text;
    jle::write_svmlight(d, text);
    const std::string s = text.str();
    jle::SparseDataset a, b;
    const double s1 = time_s([&] { a = jle::ref::parse_svmlight_serial(s); });
    const double s2 = time_s([&] { b = jle::parse_svmlight(s); });
    const bool ok = a == b && a == d;
    row("parse_svmlight", s1, s2, ok);
    failures += !ok;
  }

  {
    auto data = std::make_shared<const jle::SparseDataset>(jle::synth_blobs(64, 500, 40, 0.1, 5));
    const jle::EmbeddingMatrix m = jle::sample_matrix(64, 64, jle::MatrixKind::rademacher, 13);
    const jle::RegressionDataset reg = jle::embed_dataset(data, m);
    jle::TrainConfig cfg;
    cfg.lambda1 = 0.01;
    cfg.lambda2 = 0.01;
    cfg.max_sweeps = 30;
    jle::LinearModel m1, m2;
    cfg.workers = 1;
    const double s1 = time_s([&] { m1 = jle::train(reg, cfg); });
    cfg.workers = 0;
    const double s2 = time_s([&] { m2 = jle::train(reg, cfg); });
    const bool ok = m1.weights == m2.weights;
    row("train_cd", s1, s2, ok);
    failures += !ok;

    const jle::FeatureView feats = jle::features_of(data);
    std::vector<double> P1(static_cast<std::size_t>(feats.num_rows * m1.num_outputs));
    const double p1 = time_s([&] {
      for (std::int64_t i = 0; i < feats.num_rows; ++i) {
        const auto out = jle::ref::predict_dense(m1, feats.row_indices(i), feats.row_values(i));
        std::copy(out.begin(), out.end(), P1.begin() + i * m1.num_outputs);
      }
    });
    std::vector<double> P2;
    const double p2 = time_s([&] { P2 = jle::predict_all(m1, feats); });
    bool pok = P1.size() == P2.size();
    for (std::size_t k = 0; pok && k < P1.size(); ++k)
      if (std::abs(P1[k] - P2[k]) > 1e-12) pok = false;
    row("predict_all", p1, p2, pok);
    failures += !pok;
  }

  if (failures) {
    std::printf("%d kernel(s) disagree with the reference\n", failures);
    return 1;
  }
  return 0;
}
