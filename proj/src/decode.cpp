#include "jle/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jle/errors.hpp"
#include "omp_util.hpp"

namespace jle {

namespace {

double dot(const double* a, const double* b, std::int64_t n) {
  double s = 0;
  for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

NearestColumnDecoder::NearestColumnDecoder(const EmbeddingMatrix& m) : m_(&m) {
  half_sqnorm_.resize(static_cast<std::size_t>(m.num_classes));
  for (std::int64_t c = 0; c < m.num_classes; ++c) {
    const double* g = m.data.data() + c * m.embed_dim;
    half_sqnorm_[c] = 0.5 * dot(g, g, m.embed_dim);
  }
}

DecodeResult NearestColumnDecoder::decode(std::span<const double> p) const {
  const std::int64_t C = m_->num_classes, n = m_->embed_dim;
  if (static_cast<std::int64_t>(p.size()) != n)
    throw DimensionError("decode: query has length " + std::to_string(p.size()) +
                         ", matrix embeds into dimension " + std::to_string(n));

  // score_i = <p,g_i> - 1/2|g_i|^2 orders classes exactly like |p-g_i|.
  // Strict > keeps the smallest index on bit-equal scores.
  std::int64_t best = 0, second = -1;
  double best_s = dot(p.data(), m_->data.data(), n) - half_sqnorm_[0];
  double second_s = -std::numeric_limits<double>::infinity();
  for (std::int64_t c = 1; c < C; ++c) {
    const double s = dot(p.data(), m_->data.data() + c * n, n) - half_sqnorm_[c];
    if (s > best_s) {
      second = best;
      second_s = best_s;
      best = c;
      best_s = s;
    } else if (s > second_s || second < 0) {
      second = c;
      second_s = s;
    }
  }

  const double psq = dot(p.data(), p.data(), n);
  DecodeResult r;
  r.label = best;
  // |p|^2 - 2<p,g> + |g|^2 with <p,g> recovered from the score; exact zero
  // when p equals a column bit for bit.
  r.distance_sq = std::max(0.0, psq - 2.0 * (best_s + half_sqnorm_[best]) + 2.0 * half_sqnorm_[best]);
  if (second >= 0) {
    r.runner_up = second;
    r.runner_up_distance_sq =
        std::max(0.0, psq - 2.0 * (second_s + half_sqnorm_[second]) + 2.0 * half_sqnorm_[second]);
  }
  return r;
}

DecodeResult decode(std::span<const double> p, const EmbeddingMatrix& m) {
  return NearestColumnDecoder(m).decode(p);
}

std::vector<DecodeResult> decode_batch(std::span<const double> P, std::int64_t count,
                                       const EmbeddingMatrix& m, int workers) {
  if (count * m.embed_dim != static_cast<std::int64_t>(P.size()))
    throw DimensionError("decode_batch: buffer is not count x embed_dim");
  NearestColumnDecoder dec(m);
  std::vector<DecodeResult> out(static_cast<std::size_t>(count));
  const int nt = effective_workers(workers);
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < count; ++i)
    out[i] = dec.decode(P.subspan(static_cast<std::size_t>(i * m.embed_dim),
                                  static_cast<std::size_t>(m.embed_dim)));
  return out;
}

bool labelvec_less(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  // Scan classes in order; at the first index held by exactly one set, the
  // holder's tuple has the 1 and is the smaller (order frozen in decode.hpp).
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++i;
      ++j;
    } else {
      return a[i] < b[j];
    }
  }
  if (i < a.size()) return true;   // a holds an extra earlier 1
  return false;                    // equal, or b strictly contains a's prefix
}

namespace {

std::int64_t candidate_total(std::int64_t C, std::int64_t K, std::int64_t budget) {
  // sum_{k<=K} C-choose-k with early bail above the budget
  std::int64_t total = 0;
  double binom = 1;  // C choose 0
  for (std::int64_t k = 0; k <= K; ++k) {
    if (binom > static_cast<double>(budget) * 2.0) return budget + 1;
    total += static_cast<std::int64_t>(binom);
    if (total > budget) return total;
    binom = binom * static_cast<double>(C - k) / static_cast<double>(k + 1);
  }
  return total;
}

}  // namespace

ExactMultilabelDecoder::ExactMultilabelDecoder(const EmbeddingMatrix& m, std::int64_t sparsity,
                                               std::int64_t budget)
    : m_(&m), sparsity_(sparsity) {
  if (sparsity < 0) throw DomainError("ExactMultilabelDecoder: sparsity must be >= 0");
  candidates_ = candidate_total(m.num_classes, std::min(sparsity, m.num_classes), budget);
  if (candidates_ > budget)
    throw BudgetError("exact multilabel decode needs " + std::to_string(candidates_) +
                      " candidates, budget is " + std::to_string(budget) +
                      "; use decode_multilabel_greedy");
}

MultilabelDecodeResult ExactMultilabelDecoder::decode(std::span<const double> p) const {
  const std::int64_t C = m_->num_classes, n = m_->embed_dim;
  if (static_cast<std::int64_t>(p.size()) != n)
    throw DimensionError("decode_multilabel_exact: query length mismatch");
  const std::int64_t K = std::min(sparsity_, C);

  // Distance key |p - sum_{c in S} g_c|^2, evaluated against the materialized
  // sum with columns added in ascending label order. The key then depends on
  // the sum's bits alone, so candidate sets whose embeddings coincide bit for
  // bit always collide on bit-equal keys and the frozen lexicographic rule
  // decides between them. An incremental Gram expansion would accumulate the
  // same terms in a set-dependent order, round differently, and miss exactly
  // those ties (duplicate columns make them reachable, not just theoretical).
  std::vector<std::int32_t> best;  // start from the empty set
  double best_key = dot(p.data(), p.data(), n);

  auto consider = [&](std::span<const std::int32_t> cand, double key) {
    if (key < best_key || (key == best_key && labelvec_less(cand, best))) {
      best.assign(cand.begin(), cand.end());
      best_key = key;
    }
  };

  std::vector<std::int32_t> chosen(static_cast<std::size_t>(K));
  // sums[d] holds the embedding of chosen[0..d], rebuilt on every descent so
  // no candidate's key ever goes through a subtraction.
  std::vector<std::vector<double>> sums(
      static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(n)));
  auto rec = [&](auto&& self, std::int64_t start, std::int64_t depth) -> void {
    for (std::int64_t c = start; c < C; ++c) {
      const double* g = m_->data.data() + c * n;
      double* cur = sums[static_cast<std::size_t>(depth)].data();
      if (depth == 0) {
        for (std::int64_t i = 0; i < n; ++i) cur[i] = g[i];
      } else {
        const double* prev = sums[static_cast<std::size_t>(depth - 1)].data();
        for (std::int64_t i = 0; i < n; ++i) cur[i] = prev[i] + g[i];
      }
      double key = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = p[i] - cur[i];
        key += d * d;
      }
      chosen[static_cast<std::size_t>(depth)] = static_cast<std::int32_t>(c);
      consider(std::span<const std::int32_t>(chosen.data(), static_cast<std::size_t>(depth + 1)),
               key);
      if (depth + 1 < K) self(self, c + 1, depth + 1);
    }
  };
  if (K > 0) rec(rec, 0, 0);

  MultilabelDecodeResult r;
  r.labels = std::move(best);
  r.distance_sq = best_key;
  return r;
}

MultilabelDecodeResult decode_multilabel_exact(std::span<const double> p,
                                               const EmbeddingMatrix& m, std::int64_t sparsity,
                                               std::int64_t budget) {
  return ExactMultilabelDecoder(m, sparsity, budget).decode(p);
}

MultilabelDecodeResult decode_multilabel_greedy(std::span<const double> p,
                                                const EmbeddingMatrix& m, std::int64_t sparsity) {
  const std::int64_t C = m.num_classes, n = m.embed_dim;
  if (static_cast<std::int64_t>(p.size()) != n)
    throw DimensionError("decode_multilabel_greedy: query length mismatch");

  std::vector<double> resid(p.begin(), p.end());
  std::vector<char> used(static_cast<std::size_t>(C), 0);
  std::vector<std::int32_t> picked;

  double resid_sq = dot(resid.data(), resid.data(), n);
  for (std::int64_t step = 0; step < std::min(sparsity, C); ++step) {
    std::int64_t best = -1;
    double best_sq = resid_sq;
    for (std::int64_t c = 0; c < C; ++c) {
      if (used[c]) continue;
      const double* g = m.data.data() + c * n;
      double d = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double t = resid[i] - g[i];
        d += t * t;
      }
      if (d < best_sq) {  // strict: ties keep the earlier candidate
        best = c;
        best_sq = d;
      }
    }
    if (best < 0) break;
    used[best] = 1;
    picked.push_back(static_cast<std::int32_t>(best));
    const double* g = m.data.data() + best * n;
    for (std::int64_t i = 0; i < n; ++i) resid[i] -= g[i];
    resid_sq = best_sq;
  }

  std::sort(picked.begin(), picked.end());
  MultilabelDecodeResult r;
  r.labels = std::move(picked);
  r.distance_sq = dot(resid.data(), resid.data(), n);
  return r;
}

}  // namespace jle
