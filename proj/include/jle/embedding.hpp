#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "jle/sparse.hpp"

namespace jle {

enum class MatrixKind : std::uint8_t { gaussian = 0, rademacher = 1 };

const char* kind_name(MatrixKind k);
MatrixKind kind_from_name(const std::string& s);

// Class-to-vector code book. Column c (contiguous, column-major) is the
// n-dimensional code of class c. Entries are a pure function of
// (num_classes, embed_dim, kind, seed); the struct is immutable by
// convention after sampling or loading.
struct EmbeddingMatrix {
  std::int64_t num_classes = 0;  // C
  std::int64_t embed_dim = 0;    // n
  MatrixKind kind = MatrixKind::rademacher;
  std::uint64_t seed = 0;
  std::vector<double> data;  // C*n, column c at [c*n, (c+1)*n)

  std::span<const double> column(std::int64_t c) const {
    return {data.data() + c * embed_dim, static_cast<std::size_t>(embed_dim)};
  }
};

// Smallest dimension the calibration rule asks for:
// ceil((c0/eps^2) * ln(C/delta)), floored at 1.
std::int64_t suggest_embed_dim(std::int64_t num_classes, double epsilon, double delta,
                               double c0 = 4.0);

// Gaussian: i.i.d. N(0, 1/n). Rademacher: i.i.d. +-1/sqrt(n). Entry (r, c)
// is derived from counter c*n + r, so the fill parallelizes without
// changing a single bit.
EmbeddingMatrix sample_matrix(std::int64_t num_classes, std::int64_t embed_dim, MatrixKind kind,
                              std::uint64_t seed, int workers = 0);

// Distortion certificate over columns:
//   epsilon_observed = max( max_i |<g_i,g_i> - 1| , max_{i<j} |<g_i,g_j>| ).
// Exhaustive over all C + C(C-1)/2 pairs when C <= max_exhaustive_classes,
// a seeded deterministic pair sample beyond that.
struct JlpReport {
  double epsilon_target = 0;
  double epsilon_observed = 0;
  std::int64_t pairs_tested = 0;
  bool exhaustive = true;
  bool passed = false;
};

JlpReport verify_jlp(const EmbeddingMatrix& m, double epsilon_target, int workers = 0,
                     std::int64_t max_exhaustive_classes = 20000);

// Distortion certificate over an explicit family of vectors in R^C
// (row-major count x C): max over unordered pairs, zero vectors excluded, of
//   |<Gv, Gv'> - <v, v'>| / (|v||v'|).
// Inner products are evaluated through the C x C column Gram matrix.
JlpReport verify_jlp_family(const EmbeddingMatrix& m, std::span<const double> family,
                            std::int64_t count, double epsilon_target);

// Sum of the code columns named by `active` (sorted 0-based indices).
// Throws SparsityError when active.size() > sparsity.
std::vector<double> embed_label_set(std::span<const std::int32_t> active,
                                    const EmbeddingMatrix& m, std::int64_t sparsity);

// Target of row i is the code of its label (column g_{y_i}), or the summed
// codes of its label set for the multilabel variant. Features are shared
// with the source dataset, not copied.
RegressionDataset embed_dataset(std::shared_ptr<const SparseDataset> data,
                                const EmbeddingMatrix& m);
RegressionDataset embed_dataset(std::shared_ptr<const MultilabelDataset> data,
                                const EmbeddingMatrix& m);

}  // namespace jle
