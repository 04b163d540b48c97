#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "jle/embedding.hpp"

namespace jle {

struct DecodeResult {
  std::int64_t label = -1;  // 0-based class index
  double distance_sq = 0;
  // Second-best class, or -1 when C == 1.
  std::int64_t runner_up = -1;
  double runner_up_distance_sq = std::numeric_limits<double>::infinity();
};

// Nearest-column decoder. Selection runs on the score <p,g_i> - 1/2|g_i|^2,
// which orders classes exactly like the distance |p - g_i| but costs one dot
// product per class with the half-norms cached. Ties (bit-equal scores) go to
// the smallest index.
class NearestColumnDecoder {
 public:
  explicit NearestColumnDecoder(const EmbeddingMatrix& m);

  DecodeResult decode(std::span<const double> p) const;
  const EmbeddingMatrix& matrix() const { return *m_; }

 private:
  const EmbeddingMatrix* m_;
  std::vector<double> half_sqnorm_;
};

DecodeResult decode(std::span<const double> p, const EmbeddingMatrix& m);

// P is row-major count x n. Elementwise equal to decode() per row for any
// worker count.
std::vector<DecodeResult> decode_batch(std::span<const double> P, std::int64_t count,
                                       const EmbeddingMatrix& m, int workers = 0);

struct MultilabelDecodeResult {
  std::vector<std::int32_t> labels;  // sorted 0-based active set
  double distance_sq = 0;
};

// Order used for multilabel tie-breaking, frozen here once for the whole
// project: binary label vectors are compared entrywise from the first class;
// at the first entry where they differ, the vector holding the 1 is the
// smaller. Equivalently, of two tied candidate sets the one whose earliest
// non-shared label comes first wins. At K=1 this degenerates to the
// multiclass smallest-label rule.
bool labelvec_less(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

// Exact decoder: minimizes |p - G ybar| over all binary ybar with at most K
// active labels, lexicographically smallest (order above) among bit-equal
// distance keys. Every candidate's key is the distance to its materialized
// column sum, so two sets whose embeddings agree bit for bit always tie
// exactly. Throws BudgetError when sum_{k<=K} C(C,k) > budget.
class ExactMultilabelDecoder {
 public:
  ExactMultilabelDecoder(const EmbeddingMatrix& m, std::int64_t sparsity,
                         std::int64_t budget = 1000000);

  MultilabelDecodeResult decode(std::span<const double> p) const;
  std::int64_t candidate_count() const { return candidates_; }

 private:
  const EmbeddingMatrix* m_;
  std::int64_t sparsity_;
  std::int64_t candidates_;
};

MultilabelDecodeResult decode_multilabel_exact(std::span<const double> p,
                                               const EmbeddingMatrix& m, std::int64_t sparsity,
                                               std::int64_t budget = 1000000);

// Greedy fallback for budgets the exact decoder rejects: starting from an
// empty set, repeatedly add the column that most decreases the residual
// norm, stop after K additions or when no column decreases it.
MultilabelDecodeResult decode_multilabel_greedy(std::span<const double> p,
                                                const EmbeddingMatrix& m, std::int64_t sparsity);

}  // namespace jle
