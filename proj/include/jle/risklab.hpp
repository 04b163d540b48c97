#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jle/decode.hpp"
#include "jle/embedding.hpp"

namespace jle {

// Finite-support multiclass distribution: M support points with marginal
// probabilities pi and conditional class probabilities eta (M x C row-major,
// each row sums to 1 within 1e-12). All risks below are exact finite sums
// over this support, no sampling.
struct SyntheticDistribution {
  std::int64_t num_points = 0;   // M
  std::int64_t num_classes = 0;  // C
  std::vector<double> pi;        // M, nonnegative, sums to 1
  std::vector<double> eta;       // M x C

  SyntheticDistribution() = default;
  SyntheticDistribution(std::int64_t M, std::int64_t C, std::vector<double> pi_,
                        std::vector<double> eta_);

  std::span<const double> eta_row(std::int64_t i) const {
    return {eta.data() + i * num_classes, static_cast<std::size_t>(num_classes)};
  }
};

SyntheticDistribution random_distribution(std::int64_t M, std::int64_t C, std::uint64_t seed);

// Every support point gets a dominant class whose probability exceeds the
// runner-up by at least min_gap, so the noise margin d is >= min_gap
// everywhere.
SyntheticDistribution massart_distribution(std::int64_t M, std::int64_t C, double min_gap,
                                           std::uint64_t seed);

// Finite-support multilabel distribution. Outcomes are sorted label sets
// with conditional probabilities summing to 1 per point. The union of
// outcome supports at each point (equivalently the marginal support) has at
// most `sparsity` labels; this is the sparsity regime the Hamming bound is
// stated for, and it implies every individual outcome obeys the cap too.
struct MultilabelSyntheticDistribution {
  struct Outcome {
    std::vector<std::int32_t> labels;
    double prob = 0;
  };

  std::int64_t num_points = 0;
  std::int64_t num_classes = 0;
  std::int64_t sparsity = 0;  // K
  std::vector<double> pi;
  std::vector<std::vector<Outcome>> outcomes;  // per point
  std::vector<double> marginals;               // M x C row-major, entry c = P(label c active | x)

  MultilabelSyntheticDistribution() = default;
  MultilabelSyntheticDistribution(std::int64_t M, std::int64_t C, std::int64_t K,
                                  std::vector<double> pi_,
                                  std::vector<std::vector<Outcome>> outcomes_);

  std::span<const double> marginal_row(std::int64_t i) const {
    return {marginals.data() + i * num_classes, static_cast<std::size_t>(num_classes)};
  }
};

MultilabelSyntheticDistribution random_multilabel_distribution(std::int64_t M, std::int64_t C,
                                                               std::int64_t K,
                                                               std::uint64_t seed);

// Gap between the largest and second-largest entry of eta row i, counted
// with multiplicity: 0 whenever the max is attained twice.
double noise_margin(const SyntheticDistribution& dist, std::int64_t i);

// min over support points with pi > 0 of noise_margin.
double min_noise_margin(const SyntheticDistribution& dist);

// Conditional 0-1 excess of predicting p at point i: max_c eta_c - eta_{decoded}.
double conditional_excess_01(const SyntheticDistribution& dist, std::int64_t i,
                             std::span<const double> p, const EmbeddingMatrix& m);

// Conditional squared-loss excess. Returns the closed form
// 1/2 |p - G eta_i|^2 after asserting it agrees with the direct expectation
// difference sum_c eta_c (1/2|p-g_c|^2) minus the same at the minimizer.
double conditional_excess_sq(const SyntheticDistribution& dist, std::int64_t i,
                             std::span<const double> p, const EmbeddingMatrix& m);

// Row i is the surrogate-optimal output G eta_i. Feeding these rows to the
// excess risks gives excess_sq = 0; excess_01 is 0 wherever the embedding
// preserves the leading class.
std::vector<double> bayes_optimal_table(const SyntheticDistribution& dist,
                                        const EmbeddingMatrix& m);

// f is row-major M x n, one output per support point.
double excess_01_risk(std::span<const double> f, const SyntheticDistribution& dist,
                      const EmbeddingMatrix& m);
double excess_sq_risk(std::span<const double> f, const SyntheticDistribution& dist,
                      const EmbeddingMatrix& m);

// Fraction of entries where two sorted label sets differ, out of C.
double hamming_loss(std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                    std::int64_t num_classes);

// count points geometrically spaced over (lo, hi], excluding lo itself.
std::vector<double> geometric_grid(double lo, double hi, int count = 64);

struct ExcessRiskReport {
  double excess_loss = 0;  // 0-1 excess (multiclass) or Hamming excess (multilabel)
  double excess_sq = 0;
  double r = 0;  // grid point minimizing the right-hand side
  double term1 = 0, term2 = 0, term3 = 0;
  double rhs = 0;  // term1 + term2 + term3 at r
  bool holds = false;  // excess_loss <= rhs at every grid point (equivalently at the min)
};

// Comparison-loss transfer bound for the multiclass reduction. Requires the
// matrix to pass verify_jlp(epsilon/4) (JlpViolationError otherwise, the
// bound is vacuous there). r_grid entries must exceed epsilon; empty grid
// means geometric_grid(epsilon, 1.0, 64). For each r:
//   term1 = epsilon * P(d < r)
//   term2 = sqrt((8 epsilon + 16) * P(d < r) * excess_sq)
//   term3 = (16 + 8 epsilon) / (r - epsilon)^2 * excess_sq
// where d is the noise margin and P is over the support weights.
ExcessRiskReport multiclass_excess_bound(const SyntheticDistribution& dist,
                                         const EmbeddingMatrix& m, std::span<const double> f,
                                         double epsilon, std::span<const double> r_grid = {});

// Low-noise specialization: with g = min noise margin, requires g > epsilon
// (ConditionError otherwise) and the same epsilon/4 certificate, and asserts
//   excess_01 <= (16 + 8 epsilon) / (g - epsilon)^2 * excess_sq.
ExcessRiskReport massart_excess_bound(const SyntheticDistribution& dist,
                                      const EmbeddingMatrix& m, std::span<const double> f,
                                      double epsilon);

// Hamming-loss transfer bound for the multilabel reduction, asserted only
// for matrices passing the family certificate at epsilon/(2+2sqrt(2)) over
// {ybar} u {ybar-ybar'} u {marginal rows} u {marginal - ybar}. r_grid
// entries must exceed epsilon*K/C. Terms, with e' = epsilon/(2+2sqrt(2)):
//   term1 = epsilon * (K/C) * P(dM < r)
//   term2 = (4/C) * sqrt(2 K (1+e') * P(dM < r) * excess_sq)
//   term3 = 32 K (1+e') / (C r - K epsilon)^2 * excess_sq
// dM is the multilabel noise margin: the gap between the best and second
// best achievable conditional Hamming risks (+inf when every achievable
// candidate is optimal).
ExcessRiskReport multilabel_excess_bound(const MultilabelSyntheticDistribution& dist,
                                         const EmbeddingMatrix& m, std::span<const double> f,
                                         double epsilon, std::span<const double> r_grid = {});

// Multilabel helpers, exposed for tests and campaigns.

// The certificate multilabel_excess_bound requires, as a standalone check:
// distortion over the candidate label vectors, their pairwise differences,
// the marginals, and marginal-minus-candidate residuals.
JlpReport verify_multilabel_family(const MultilabelSyntheticDistribution& dist,
                                   const EmbeddingMatrix& m, double eps_jlp);

std::vector<double> multilabel_bayes_table(const MultilabelSyntheticDistribution& dist,
                                           const EmbeddingMatrix& m);  // rows G eta^M
double multilabel_noise_margin(const MultilabelSyntheticDistribution& dist, std::int64_t i,
                               const EmbeddingMatrix& m);
double hamming_excess_risk(std::span<const double> f,
                           const MultilabelSyntheticDistribution& dist,
                           const EmbeddingMatrix& m);
double multilabel_excess_sq_risk(std::span<const double> f,
                                 const MultilabelSyntheticDistribution& dist,
                                 const EmbeddingMatrix& m);

// Executable forms of the supporting lemmas, checked on random draws.
// Requires the epsilon/4 certificate. Premise-free lemmas count every draw
// as a hit; implication lemmas count only draws where the premise fires.
struct OracleCounts {
  std::int64_t draws = 0;
  std::int64_t premise_hits = 0;
  std::int64_t violations = 0;
};

struct LemmaReport {
  OracleCounts norm_sandwich;        // | |G(eta-e_j)|^2 - |eta-e_j|^2 | <= epsilon
  OracleCounts order_preservation;   // margin > |Geta - p| forces the right distance order
  OracleCounts risk_transfer;        // small excess_sq at a point forces small excess_01
  OracleCounts sublevel_radius;      // excess_sq(p) < d0^2/2 forces |p - Geta| < d0
  double epsilon = 0;
  std::uint64_t seed = 0;
};

LemmaReport run_lemma_checks(const SyntheticDistribution& dist, const EmbeddingMatrix& m,
                             double epsilon, std::int64_t draws, std::uint64_t seed);

}  // namespace jle
