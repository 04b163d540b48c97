#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "jle/decode.hpp"
#include "jle/embedding.hpp"
#include "jle/regress.hpp"
#include "jle/risklab.hpp"
#include "jle/sparse.hpp"

// Serial reference implementations. Everything here is written the slow,
// obvious way, independent of the kernels in jle_core: tests compare the two
// routes, and bench_kernels times them against each other. Keep this code
// boring; it is the oracle side of every dual-route check.
namespace jle::ref {

// Dense Gram scan, serial: max deviation of G^T G from the identity.
double max_gram_distortion(const EmbeddingMatrix& m);

// Distance argmin by explicit per-class distance loops, first strict
// improvement wins (equals the smallest-index tie rule).
DecodeResult decode_nearest(std::span<const double> p, const EmbeddingMatrix& m);

// Exhaustive multilabel argmin enumerating candidates in the frozen
// lexicographic order (1-branch before 0-branch), materializing G ybar
// densely, first strict improvement wins.
MultilabelDecodeResult decode_multilabel_lex(std::span<const double> p,
                                             const EmbeddingMatrix& m, std::int64_t sparsity);

// Closed-form ridge weights (X^T X + 2 lambda2 I)^{-1} X^T t per output
// column, solved densely. D x n row-major.
std::vector<double> ridge_solution(const RegressionDataset& data, double lambda2);

// Elastic-net objective for one output column, evaluated from scratch.
double elastic_net_objective(const RegressionDataset& data, std::span<const double> w,
                             std::int64_t output, double lambda1, double lambda2);

// Serial dense prediction of one sparse row.
std::vector<double> predict_dense(const LinearModel& model, std::span<const std::int32_t> idx,
                                  std::span<const double> val);

// Risks by full enumeration over (support point, class outcome) pairs,
// including the Bayes terms, instead of the closed forms.
double excess_01_direct(std::span<const double> f, const SyntheticDistribution& dist,
                        const EmbeddingMatrix& m);
double excess_sq_direct(std::span<const double> f, const SyntheticDistribution& dist,
                        const EmbeddingMatrix& m);

// Hamming excess by expectation over the outcome tables and explicit decode
// of every achievable candidate.
double hamming_excess_direct(std::span<const double> f,
                             const MultilabelSyntheticDistribution& dist,
                             const EmbeddingMatrix& m);
double multilabel_excess_sq_direct(std::span<const double> f,
                                   const MultilabelSyntheticDistribution& dist,
                                   const EmbeddingMatrix& m);

// Plain one-line-at-a-time svmlight parser.
SparseDataset parse_svmlight_serial(std::string_view text);

}  // namespace jle::ref
