#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "doctest.h"
#include "jle/dataio.hpp"
#include "jle/embedding.hpp"
#include "jle/errors.hpp"
#include "jle/ref.hpp"
#include "jle/rng.hpp"

using namespace jle;

namespace {

// Identity code book: orthonormal columns, zero distortion by construction.
EmbeddingMatrix basis_matrix(std::int64_t C) {
  EmbeddingMatrix m;
  m.num_classes = C;
  m.embed_dim = C;
  m.kind = MatrixKind::rademacher;
  m.data.assign(static_cast<std::size_t>(C * C), 0.0);
  for (std::int64_t c = 0; c < C; ++c) m.data[c * C + c] = 1.0;
  return m;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("suggest_embed_dim follows the calibration rule") {
  CHECK(suggest_embed_dim(1000, 0.25, 0.1, 4.0) == 590);
  CHECK(suggest_embed_dim(1000, 0.25, 0.1) == 590);  // c0 defaults to 4
  CHECK(suggest_embed_dim(2, 0.9, 0.5, 1.0) == 2);
  CHECK(suggest_embed_dim(3, 1.0, 1.0, 1.0) == 2);  // boundary epsilon = delta = 1 accepted
  CHECK(suggest_embed_dim(2, 1.0, 1.0, 1.0) == 1);  // floor at 1

  CHECK_THROWS_AS(suggest_embed_dim(1, 0.5, 0.5), DomainError);
  CHECK_THROWS_AS(suggest_embed_dim(10, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(suggest_embed_dim(10, 1.5, 0.5), DomainError);
  CHECK_THROWS_AS(suggest_embed_dim(10, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(suggest_embed_dim(10, 0.5, 1.5), DomainError);
  CHECK_THROWS_AS(suggest_embed_dim(10, 0.5, 0.5, 0.0), DomainError);
}

TEST_CASE("rademacher entries are +-1/sqrt(n) with unit columns") {
  const EmbeddingMatrix m = sample_matrix(4, 9, MatrixKind::rademacher, 7);
  const double third = 1.0 / 3.0;
  for (double v : m.data) CHECK(std::fabs(v) == third);
  for (std::int64_t c = 0; c < 4; ++c) {
    double sq = 0;
    for (double v : m.column(c)) sq += v * v;
    CHECK(std::fabs(sq - 1.0) <= 1e-12);
  }
}

TEST_CASE("matrix entry (r,c) is a pure function of counter c*n+r") {
  const std::int64_t C = 5, n = 7;
  const CounterRng rng{42};
  const double scale = 1.0 / std::sqrt(7.0);
  const EmbeddingMatrix rad = sample_matrix(C, n, MatrixKind::rademacher, 42);
  const EmbeddingMatrix gau = sample_matrix(C, n, MatrixKind::gaussian, 42);
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t r = 0; r < n; ++r) {
      const std::uint64_t k = static_cast<std::uint64_t>(c * n + r);
      CHECK(rad.data[c * n + r] == rng.sign(k) * scale);
      CHECK(gau.data[c * n + r] == rng.gaussian(k) * scale);
    }
}

TEST_CASE("sample_matrix is bitwise worker-invariant") {
  const EmbeddingMatrix a = sample_matrix(33, 17, MatrixKind::gaussian, 5, 1);
  const EmbeddingMatrix b = sample_matrix(33, 17, MatrixKind::gaussian, 5, 4);
  CHECK(a.data == b.data);
}

TEST_CASE("degenerate matrix shapes are rejected") {
  CHECK_THROWS_AS(sample_matrix(1, 4, MatrixKind::rademacher, 0), DimensionError);
  CHECK_THROWS_AS(sample_matrix(3, 0, MatrixKind::rademacher, 0), DimensionError);
}

TEST_CASE("smallest legal shape C=2 n=1") {
  const EmbeddingMatrix m = sample_matrix(2, 1, MatrixKind::gaussian, 0);
  CHECK(m.num_classes == 2);
  CHECK(m.embed_dim == 1);
  CHECK(m.kind == MatrixKind::gaussian);
  CHECK(m.seed == 0);
  CHECK(m.data.size() == 2);
  CHECK(m.data[0] != m.data[1]);
}

TEST_CASE("kind names round-trip") {
  CHECK(kind_from_name("gaussian") == MatrixKind::gaussian);
  CHECK(kind_from_name(kind_name(MatrixKind::rademacher)) == MatrixKind::rademacher);
  CHECK_THROWS_AS(kind_from_name("hadamard"), DomainError);
}

TEST_CASE("verify_jlp on the standard basis reports zero distortion") {
  const EmbeddingMatrix m = basis_matrix(6);
  const JlpReport rep = verify_jlp(m, 0.1);
  CHECK(rep.epsilon_observed == 0.0);
  CHECK(rep.passed);
  CHECK(rep.exhaustive);
  CHECK(rep.pairs_tested == 6 + 6 * 5 / 2);
}

TEST_CASE("verify_jlp flags a single stretched column via its norm") {
  EmbeddingMatrix m;
  m.num_classes = 1;
  m.embed_dim = 2;
  m.data = {1.0, 1.0};  // squared norm 2
  const JlpReport rep = verify_jlp(m, 0.5);
  CHECK(rep.epsilon_observed == 1.0);
  CHECK_FALSE(rep.passed);
  CHECK(rep.pairs_tested == 1);
}

TEST_CASE("verify_jlp agrees with the dense Gram oracle") {
  const EmbeddingMatrix m = sample_matrix(100, 512, MatrixKind::gaussian, 3);
  const JlpReport rep = verify_jlp(m, 0.25);
  CHECK(rep.exhaustive);
  CHECK(rep.pairs_tested == 100 + 100 * 99 / 2);
  CHECK(std::fabs(rep.epsilon_observed - ref::max_gram_distortion(m)) <= 1e-12);
  CHECK(rep.passed == (rep.epsilon_observed <= 0.25));
  CHECK(verify_jlp(m, 0.25, 3).epsilon_observed == rep.epsilon_observed);
}

TEST_CASE("rademacher distortion at C=1000 n=1024 over 20 seeds") {
  int passes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EmbeddingMatrix m = sample_matrix(1000, 1024, MatrixKind::rademacher, seed);
    if (verify_jlp(m, 0.25).passed) ++passes;
  }
  CHECK(passes >= 19);
}

TEST_CASE("verify_jlp_family includes self-pairs and skips zero vectors") {
  const EmbeddingMatrix m = basis_matrix(4);
  // e0, e0 - e1, the zero vector, and a dense row; orthonormal columns keep
  // every pair distortion-free, and the zero row must not poison the max.
  const std::vector<double> family = {1, 0,   0,   0,   1, -1, 0, 0,
                                      0, 0,   0,   0,   0.3, 0.3, 0.4, 0};
  const JlpReport rep = verify_jlp_family(m, family, 4, 0.1);
  CHECK(rep.epsilon_observed == 0.0);
  CHECK(rep.passed);

  // One stretched column and a single family vector: only the self-pair can
  // catch the distortion, so this is what proves self-pairs are covered.
  EmbeddingMatrix s;
  s.num_classes = 1;
  s.embed_dim = 2;
  s.data = {1.0, 1.0};
  const std::vector<double> one = {1.0};
  const JlpReport rep2 = verify_jlp_family(s, one, 1, 0.5);
  CHECK(rep2.epsilon_observed == 1.0);
  CHECK_FALSE(rep2.passed);

  CHECK_THROWS_AS(verify_jlp_family(m, std::span<const double>(family.data(), 7), 2, 0.1),
                  DimensionError);
}

TEST_CASE("embed_label_set sums the active columns") {
  const EmbeddingMatrix m = sample_matrix(6, 16, MatrixKind::gaussian, 11);

  const std::vector<double> zero = embed_label_set({}, m, 2);
  for (double v : zero) CHECK(v == 0.0);

  const std::int32_t single[] = {2};
  CHECK(same_bits(embed_label_set(single, m, 2), m.column(2)));

  const std::int32_t pair[] = {0, 2};
  const std::vector<double> got = embed_label_set(pair, m, 2);
  for (std::int64_t r = 0; r < 16; ++r)
    CHECK(got[r] == doctest::Approx(m.column(0)[r] + m.column(2)[r]).epsilon(1e-14));

  const std::int32_t triple[] = {0, 1, 2};
  CHECK_THROWS_AS(embed_label_set(triple, m, 2), SparsityError);
  const std::int32_t high[] = {6};
  CHECK_THROWS_AS(embed_label_set(high, m, 2), LabelRangeError);
  const std::int32_t negative[] = {-1};
  CHECK_THROWS_AS(embed_label_set(negative, m, 2), LabelRangeError);
}

TEST_CASE("embed_label_set is additive over disjoint supports") {
  const EmbeddingMatrix m = sample_matrix(8, 32, MatrixKind::rademacher, 4);
  const std::int32_t a[] = {0, 1};
  const std::int32_t b[] = {3, 5};
  const std::int32_t both[] = {0, 1, 3, 5};
  const std::vector<double> va = embed_label_set(a, m, 4);
  const std::vector<double> vb = embed_label_set(b, m, 4);
  const std::vector<double> vu = embed_label_set(both, m, 4);
  for (std::int64_t r = 0; r < 32; ++r)
    CHECK(vu[r] == doctest::Approx(va[r] + vb[r]).epsilon(1e-13));
}

TEST_CASE("embed_dataset targets are the label columns, features shared") {
  auto d = std::make_shared<SparseDataset>();
  d->num_features = 3;
  d->num_classes = 4;
  d->labels = {2, 0, 3, 2};
  d->row_ptr = {0, 1, 3, 3, 4};
  d->col = {0, 1, 2, 2};
  d->val = {1.0, 0.5, -2.0, 4.0};

  const EmbeddingMatrix m = sample_matrix(4, 8, MatrixKind::rademacher, 3);
  const RegressionDataset reg = embed_dataset(std::shared_ptr<const SparseDataset>(d), m);

  CHECK(reg.n == 8);
  CHECK(reg.rows() == 4);
  for (std::int64_t i = 0; i < 4; ++i)
    CHECK(same_bits(reg.target_row(i), m.column(d->labels[i])));

  // Shared, not copied.
  CHECK(reg.features.col == d->col.data());
  CHECK(reg.features.val == d->val.data());
  CHECK(reg.features.row_ptr == d->row_ptr.data());
}

TEST_CASE("embed_dataset of an empty dataset is empty") {
  auto d = std::make_shared<const SparseDataset>();
  const EmbeddingMatrix m = sample_matrix(3, 4, MatrixKind::gaussian, 1);
  const RegressionDataset reg = embed_dataset(d, m);
  CHECK(reg.rows() == 0);
  CHECK(reg.targets.empty());
}

TEST_CASE("embed_dataset matches the per-row oracle on 100 random rows") {
  const SparseDataset blobs = synth_blobs(10, 30, 10, 0.3, 9);
  REQUIRE(blobs.rows() == 100);
  auto d = std::make_shared<const SparseDataset>(blobs);
  const EmbeddingMatrix m = sample_matrix(10, 12, MatrixKind::gaussian, 2);
  const RegressionDataset reg = embed_dataset(d, m);
  for (std::int64_t i = 0; i < 100; ++i)
    CHECK(same_bits(reg.target_row(i), m.column(d->labels[i])));
}

TEST_CASE("embed_dataset names the row carrying an out-of-range label") {
  auto d = std::make_shared<SparseDataset>();
  d->num_features = 1;
  d->num_classes = 6;
  d->labels = {0, 5, 1};
  d->row_ptr = {0, 0, 0, 0};

  const EmbeddingMatrix m = sample_matrix(3, 4, MatrixKind::gaussian, 1);
  try {
    embed_dataset(std::shared_ptr<const SparseDataset>(d), m);
    FAIL("expected LabelRangeError");
  } catch (const LabelRangeError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("embed_dataset commutes with row permutation") {
  const SparseDataset blobs = synth_blobs(5, 20, 4, 0.2, 8);
  SparseDataset rev;
  rev.num_features = blobs.num_features;
  rev.num_classes = blobs.num_classes;
  for (std::int64_t i = blobs.rows() - 1; i >= 0; --i) {
    rev.labels.push_back(blobs.labels[i]);
    const auto idx = blobs.row_indices(i);
    const auto val = blobs.row_values(i);
    rev.col.insert(rev.col.end(), idx.begin(), idx.end());
    rev.val.insert(rev.val.end(), val.begin(), val.end());
    rev.row_ptr.push_back(static_cast<std::int64_t>(rev.col.size()));
  }

  const EmbeddingMatrix m = sample_matrix(5, 8, MatrixKind::rademacher, 6);
  const RegressionDataset a =
      embed_dataset(std::make_shared<const SparseDataset>(blobs), m);
  const RegressionDataset b = embed_dataset(std::make_shared<const SparseDataset>(rev), m);
  const std::int64_t N = blobs.rows();
  for (std::int64_t i = 0; i < N; ++i)
    CHECK(same_bits(a.target_row(i), b.target_row(N - 1 - i)));
}

TEST_CASE("multilabel embed_dataset sums each row's label set") {
  auto d = std::make_shared<MultilabelDataset>();
  d->num_features = 2;
  d->num_classes = 3;
  d->sparsity = 2;
  d->row_ptr = {0, 0, 0, 0};
  d->label_ptr = {0, 0, 1, 3};
  d->label_idx = {1, 0, 2};

  const EmbeddingMatrix m = sample_matrix(3, 8, MatrixKind::gaussian, 5);
  const RegressionDataset reg =
      embed_dataset(std::shared_ptr<const MultilabelDataset>(d), m);

  for (double v : reg.target_row(0)) CHECK(v == 0.0);
  CHECK(same_bits(reg.target_row(1), m.column(1)));
  const std::int32_t pair[] = {0, 2};
  const std::vector<double> want = embed_label_set(pair, m, 2);
  CHECK(same_bits(reg.target_row(2), want));
}
