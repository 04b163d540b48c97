#include "jle/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "jle/errors.hpp"
#include "jle/rng.hpp"
#include "omp_util.hpp"

namespace jle {

const char* kind_name(MatrixKind k) {
  return k == MatrixKind::gaussian ? "gaussian" : "rademacher";
}

MatrixKind kind_from_name(const std::string& s) {
  if (s == "gaussian") return MatrixKind::gaussian;
  if (s == "rademacher") return MatrixKind::rademacher;
  throw DomainError("unknown matrix kind '" + s + "' (expected gaussian or rademacher)");
}

std::int64_t suggest_embed_dim(std::int64_t num_classes, double epsilon, double delta,
                               double c0) {
  if (num_classes < 2) throw DomainError("suggest_embed_dim: num_classes must be >= 2");
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw DomainError("suggest_embed_dim: epsilon must lie in (0, 1]");
  if (!(delta > 0.0) || delta > 1.0)
    throw DomainError("suggest_embed_dim: delta must lie in (0, 1]");
  if (!(c0 > 0.0)) throw DomainError("suggest_embed_dim: c0 must be positive");
  const double raw =
      (c0 / (epsilon * epsilon)) * std::log(static_cast<double>(num_classes) / delta);
  const double n = std::ceil(raw);
  return n < 1.0 ? 1 : static_cast<std::int64_t>(n);
}

EmbeddingMatrix sample_matrix(std::int64_t num_classes, std::int64_t embed_dim, MatrixKind kind,
                              std::uint64_t seed, int workers) {
  if (num_classes < 2) throw DimensionError("sample_matrix: num_classes must be >= 2");
  if (embed_dim < 1) throw DimensionError("sample_matrix: embed_dim must be >= 1");

  EmbeddingMatrix m;
  m.num_classes = num_classes;
  m.embed_dim = embed_dim;
  m.kind = kind;
  m.seed = seed;
  m.data.resize(static_cast<std::size_t>(num_classes * embed_dim));

  const CounterRng rng{seed};
  const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  double* out = m.data.data();
  const std::int64_t total = num_classes * embed_dim;

  // Entry k depends only on (seed, k): any split of this loop is bit-identical.
  const int nt = effective_workers(workers);
  if (kind == MatrixKind::rademacher) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t k = 0; k < total; ++k) out[k] = rng.sign(k) * scale;
  } else {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t k = 0; k < total; ++k) out[k] = rng.gaussian(k) * scale;
  }
  return m;
}

namespace {

double dot(const double* a, const double* b, std::int64_t n) {
  double s = 0;
  for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

JlpReport verify_jlp(const EmbeddingMatrix& m, double epsilon_target, int workers,
                     std::int64_t max_exhaustive_classes) {
  const std::int64_t C = m.num_classes, n = m.embed_dim;
  JlpReport rep;
  rep.epsilon_target = epsilon_target;

  double worst = 0.0;
  const int nt = effective_workers(workers);
  if (C <= max_exhaustive_classes) {
    rep.exhaustive = true;
    rep.pairs_tested = C + C * (C - 1) / 2;
#pragma omp parallel for schedule(dynamic, 8) reduction(max : worst) num_threads(nt)
    for (std::int64_t i = 0; i < C; ++i) {
      const double* gi = m.data.data() + i * n;
      double local = std::fabs(dot(gi, gi, n) - 1.0);
      for (std::int64_t j = i + 1; j < C; ++j) {
        const double v = std::fabs(dot(gi, m.data.data() + j * n, n));
        if (v > local) local = v;
      }
      if (local > worst) worst = local;
    }
  } else {
    // Deterministic sample: all diagonal terms plus a seeded draw of off-diagonal pairs.
    rep.exhaustive = false;
    const std::int64_t sample_pairs = 2000000;
    rep.pairs_tested = C + sample_pairs;
    const CounterRng rng = CounterRng{m.seed}.derive(0x4a4c50);
#pragma omp parallel for schedule(static) reduction(max : worst) num_threads(nt)
    for (std::int64_t i = 0; i < C; ++i) {
      const double* gi = m.data.data() + i * n;
      const double v = std::fabs(dot(gi, gi, n) - 1.0);
      if (v > worst) worst = v;
    }
#pragma omp parallel for schedule(static) reduction(max : worst) num_threads(nt)
    for (std::int64_t k = 0; k < sample_pairs; ++k) {
      const std::int64_t i = static_cast<std::int64_t>(rng.below(2 * k, static_cast<std::uint64_t>(C)));
      std::int64_t j = static_cast<std::int64_t>(rng.below(2 * k + 1, static_cast<std::uint64_t>(C - 1)));
      if (j >= i) ++j;
      const double v = std::fabs(dot(m.data.data() + i * n, m.data.data() + j * n, n));
      if (v > worst) worst = v;
    }
  }

  rep.epsilon_observed = worst;
  rep.passed = worst <= epsilon_target;
  return rep;
}

JlpReport verify_jlp_family(const EmbeddingMatrix& m, std::span<const double> family,
                            std::int64_t count, double epsilon_target) {
  const std::int64_t C = m.num_classes, n = m.embed_dim;
  if (count * C != static_cast<std::int64_t>(family.size()))
    throw DimensionError("verify_jlp_family: family must be count x C row-major");

  // <Gv, Gv'> = v'^T (G^T G) v; the Gram matrix makes each pair O(C^2).
  std::vector<double> gram(static_cast<std::size_t>(C) * C);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < C; ++i)
    for (std::int64_t j = 0; j < C; ++j)
      gram[i * C + j] = dot(m.data.data() + i * n, m.data.data() + j * n, n);

  std::vector<double> norms(count);
  for (std::int64_t i = 0; i < count; ++i)
    norms[i] = std::sqrt(dot(family.data() + i * C, family.data() + i * C, C));

  JlpReport rep;
  rep.epsilon_target = epsilon_target;
  rep.exhaustive = true;

  double worst = 0.0;
  std::int64_t tested = 0;
#pragma omp parallel for schedule(dynamic, 4) reduction(max : worst) reduction(+ : tested)
  for (std::int64_t a = 0; a < count; ++a) {
    if (norms[a] == 0.0) continue;
    const double* va = family.data() + a * C;
    std::vector<double> gv(C);  // (G^T G) va
    for (std::int64_t i = 0; i < C; ++i) gv[i] = dot(gram.data() + i * C, va, C);
    for (std::int64_t b = a; b < count; ++b) {
      if (norms[b] == 0.0) continue;
      const double* vb = family.data() + b * C;
      const double sketched = dot(gv.data(), vb, C);
      const double exact = dot(va, vb, C);
      const double rel = std::fabs(sketched - exact) / (norms[a] * norms[b]);
      if (rel > worst) worst = rel;
      ++tested;
    }
  }

  rep.pairs_tested = tested;
  rep.epsilon_observed = worst;
  rep.passed = worst <= epsilon_target;
  return rep;
}

std::vector<double> embed_label_set(std::span<const std::int32_t> active,
                                    const EmbeddingMatrix& m, std::int64_t sparsity) {
  if (static_cast<std::int64_t>(active.size()) > sparsity)
    throw SparsityError("embed_label_set: " + std::to_string(active.size()) +
                        " active labels exceed sparsity cap " + std::to_string(sparsity));
  std::vector<double> out(static_cast<std::size_t>(m.embed_dim), 0.0);
  for (std::int32_t c : active) {
    if (c < 0 || c >= m.num_classes)
      throw LabelRangeError("embed_label_set: label " + std::to_string(c + 1) +
                            " outside {1.." + std::to_string(m.num_classes) + "}");
    const double* g = m.data.data() + static_cast<std::int64_t>(c) * m.embed_dim;
    for (std::int64_t r = 0; r < m.embed_dim; ++r) out[r] += g[r];
  }
  return out;
}

RegressionDataset embed_dataset(std::shared_ptr<const SparseDataset> data,
                                const EmbeddingMatrix& m) {
  const SparseDataset& d = *data;
  const std::int64_t N = d.rows(), n = m.embed_dim;
  RegressionDataset out;
  out.n = n;
  out.targets.resize(static_cast<std::size_t>(N * n));
  for (std::int64_t i = 0; i < N; ++i) {
    const std::int32_t y = d.labels[i];
    if (y < 0 || y >= m.num_classes)
      throw LabelRangeError("embed_dataset: row " + std::to_string(i + 1) + " has label " +
                            std::to_string(y + 1) + " outside {1.." +
                            std::to_string(m.num_classes) + "}");
    std::memcpy(out.targets.data() + i * n, m.data.data() + static_cast<std::int64_t>(y) * n,
                sizeof(double) * static_cast<std::size_t>(n));
  }
  out.features = features_of(std::move(data));
  return out;
}

RegressionDataset embed_dataset(std::shared_ptr<const MultilabelDataset> data,
                                const EmbeddingMatrix& m) {
  const MultilabelDataset& d = *data;
  const std::int64_t N = d.rows(), n = m.embed_dim;
  RegressionDataset out;
  out.n = n;
  out.targets.resize(static_cast<std::size_t>(N * n));
  for (std::int64_t i = 0; i < N; ++i) {
    std::vector<double> t;
    try {
      t = embed_label_set(d.row_labels(i), m, d.sparsity);
    } catch (const LabelRangeError&) {
      throw LabelRangeError("embed_dataset: row " + std::to_string(i + 1) +
                            " has a label outside {1.." + std::to_string(m.num_classes) + "}");
    }
    std::memcpy(out.targets.data() + i * n, t.data(), sizeof(double) * static_cast<std::size_t>(n));
  }
  out.features = features_of(std::move(data));
  return out;
}

}  // namespace jle
