#include "jle/risklab.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "jle/errors.hpp"
#include "jle/rng.hpp"

namespace jle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Divide by the sum, then absorb the leftover rounding into the largest
// entry so the row sums to 1 at validation precision.
void normalize_row(std::span<double> v) {
  double s = 0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  double s2 = 0;
  for (double x : v) s2 += x;
  auto mx = std::max_element(v.begin(), v.end());
  *mx -= s2 - 1.0;
}

void fill_dirichlet(std::span<double> v, const CounterRng& rng, std::uint64_t base) {
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = -std::log(rng.uniform(base + i));  // uniform is in (0,1), log is finite
  normalize_row(v);
}

void check_probability_row(std::span<const double> v, const std::string& what) {
  double s = 0;
  for (double x : v) {
    if (!(x >= 0)) throw DomainError(what + ": negative or non-finite entry");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw DomainError(what + ": entries sum to " + std::to_string(s) + ", expected 1");
}

void check_point(std::int64_t i, std::int64_t M) {
  if (i < 0 || i >= M)
    throw DomainError("support point index " + std::to_string(i) + " outside [0, " +
                      std::to_string(M) + ")");
}

void check_matrix(const EmbeddingMatrix& m, std::int64_t C) {
  if (m.num_classes != C)
    throw DimensionError("matrix has " + std::to_string(m.num_classes) +
                         " columns, distribution has " + std::to_string(C) + " classes");
}

double dist_sq(const double* a, const double* b, std::int64_t n) {
  double s = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// G w for a dense weight vector w over classes (sum of scaled columns).
std::vector<double> embed_weights(std::span<const double> w, const EmbeddingMatrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.embed_dim), 0.0);
  for (std::int64_t c = 0; c < m.num_classes; ++c) {
    const double wc = w[c];
    if (wc == 0) continue;
    const double* g = m.data.data() + c * m.embed_dim;
    for (std::int64_t i = 0; i < m.embed_dim; ++i) out[i] += wc * g[i];
  }
  return out;
}

}  // namespace

SyntheticDistribution::SyntheticDistribution(std::int64_t M, std::int64_t C,
                                             std::vector<double> pi_, std::vector<double> eta_)
    : num_points(M), num_classes(C), pi(std::move(pi_)), eta(std::move(eta_)) {
  if (M < 1) throw DimensionError("distribution needs at least one support point");
  if (C < 2) throw DimensionError("distribution needs at least two classes");
  if (static_cast<std::int64_t>(pi.size()) != M)
    throw DimensionError("pi has " + std::to_string(pi.size()) + " entries, expected " +
                         std::to_string(M));
  if (static_cast<std::int64_t>(eta.size()) != M * C)
    throw DimensionError("eta block is not M x C");
  check_probability_row(pi, "pi");
  for (std::int64_t i = 0; i < M; ++i)
    check_probability_row(eta_row(i), "eta row " + std::to_string(i));
}

SyntheticDistribution random_distribution(std::int64_t M, std::int64_t C, std::uint64_t seed) {
  CounterRng rng{seed};
  std::vector<double> pi(static_cast<std::size_t>(M));
  fill_dirichlet(pi, rng.derive(0), 0);
  std::vector<double> eta(static_cast<std::size_t>(M) * C);
  const CounterRng er = rng.derive(1);
  for (std::int64_t i = 0; i < M; ++i)
    fill_dirichlet({eta.data() + i * C, static_cast<std::size_t>(C)}, er,
                   static_cast<std::uint64_t>(i) * C);
  return SyntheticDistribution(M, C, std::move(pi), std::move(eta));
}

SyntheticDistribution massart_distribution(std::int64_t M, std::int64_t C, double min_gap,
                                           std::uint64_t seed) {
  if (!(min_gap > 0 && min_gap <= 1))
    throw DomainError("massart_distribution: min_gap must be in (0, 1]");
  if (C < 2) throw DimensionError("massart_distribution: need C >= 2");
  CounterRng rng{seed};
  std::vector<double> pi(static_cast<std::size_t>(M));
  fill_dirichlet(pi, rng.derive(0), 0);

  std::vector<double> eta(static_cast<std::size_t>(M) * C, 0.0);
  for (std::int64_t i = 0; i < M; ++i) {
    const CounterRng pt = rng.derive(10 + static_cast<std::uint64_t>(i));
    const std::int64_t w = static_cast<std::int64_t>(pt.below(0, static_cast<std::uint64_t>(C)));
    std::vector<double> rest(static_cast<std::size_t>(C) - 1);
    fill_dirichlet(rest, pt, 1);
    const double mx = *std::max_element(rest.begin(), rest.end());
    // Dominant mass a with a - (1-a)*mx = min_gap + slack, slack > 0 so the
    // realized margin sits strictly above min_gap.
    const double t = (min_gap + mx) / (1.0 + mx);
    const double a = t + (1.0 - t) * (0.01 + 0.09 * pt.uniform(static_cast<std::uint64_t>(C) + 4));
    double* row = eta.data() + i * C;
    std::size_t k = 0;
    for (std::int64_t c = 0; c < C; ++c)
      row[c] = (c == w) ? a : (1.0 - a) * rest[k++];
    normalize_row({row, static_cast<std::size_t>(C)});
  }
  return SyntheticDistribution(M, C, std::move(pi), std::move(eta));
}

MultilabelSyntheticDistribution::MultilabelSyntheticDistribution(
    std::int64_t M, std::int64_t C, std::int64_t K, std::vector<double> pi_,
    std::vector<std::vector<Outcome>> outcomes_)
    : num_points(M), num_classes(C), sparsity(K), pi(std::move(pi_)),
      outcomes(std::move(outcomes_)) {
  if (M < 1) throw DimensionError("multilabel distribution needs at least one support point");
  if (C < 2) throw DimensionError("multilabel distribution needs at least two classes");
  if (K < 0 || K > C) throw DomainError("sparsity must lie in [0, C]");
  if (static_cast<std::int64_t>(pi.size()) != M || static_cast<std::int64_t>(outcomes.size()) != M)
    throw DimensionError("pi and outcome tables must both have M entries");
  check_probability_row(pi, "pi");

  marginals.assign(static_cast<std::size_t>(M) * C, 0.0);
  for (std::int64_t i = 0; i < M; ++i) {
    double total = 0;
    for (const Outcome& o : outcomes[i]) {
      if (!(o.prob >= 0) || !std::isfinite(o.prob))
        throw DomainError("outcome probability at point " + std::to_string(i) +
                          " is negative or non-finite");
      total += o.prob;
      if (static_cast<std::int64_t>(o.labels.size()) > K)
        throw SparsityError("outcome at point " + std::to_string(i) + " has " +
                            std::to_string(o.labels.size()) + " labels, cap is " +
                            std::to_string(K));
      std::int32_t prev = -1;
      for (std::int32_t c : o.labels) {
        if (c < 0 || c >= C)
          throw LabelRangeError("outcome label " + std::to_string(c) + " outside [0, " +
                                std::to_string(C) + ")");
        if (c <= prev)
          throw DomainError("outcome labels at point " + std::to_string(i) +
                            " are not strictly increasing");
        prev = c;
        marginals[i * C + c] += o.prob;
      }
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw DomainError("outcome probabilities at point " + std::to_string(i) + " sum to " +
                        std::to_string(total) + ", expected 1");
    std::int64_t active = 0;
    for (std::int64_t c = 0; c < C; ++c)
      if (marginals[i * C + c] > 0) ++active;
    if (active > K)
      throw SparsityError("marginal at point " + std::to_string(i) + " has " +
                          std::to_string(active) + " active labels, cap is " + std::to_string(K));
  }
}

MultilabelSyntheticDistribution random_multilabel_distribution(std::int64_t M, std::int64_t C,
                                                               std::int64_t K,
                                                               std::uint64_t seed) {
  if (K < 1 || K > C) throw DomainError("random_multilabel_distribution: need 1 <= K <= C");
  if (K > 12) throw DomainError("random_multilabel_distribution: 2^K outcomes, K > 12 refused");
  CounterRng rng{seed};
  std::vector<double> pi(static_cast<std::size_t>(M));
  fill_dirichlet(pi, rng.derive(0), 0);

  std::vector<std::vector<MultilabelSyntheticDistribution::Outcome>> outs(
      static_cast<std::size_t>(M));
  for (std::int64_t i = 0; i < M; ++i) {
    const CounterRng pt = rng.derive(10 + static_cast<std::uint64_t>(i));
    // K distinct support labels by partial shuffle
    std::vector<std::int32_t> all(static_cast<std::size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) all[c] = static_cast<std::int32_t>(c);
    for (std::int64_t t = 0; t < K; ++t) {
      const std::uint64_t j =
          pt.below(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(C - t));
      std::swap(all[t], all[t + static_cast<std::int64_t>(j)]);
    }
    std::vector<std::int32_t> support(all.begin(), all.begin() + K);
    std::sort(support.begin(), support.end());

    const std::size_t count = std::size_t{1} << K;  // all subsets of the support
    std::vector<double> probs(count);
    fill_dirichlet(probs, pt, 1000);
    auto& list = outs[i];
    list.resize(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
      for (std::int64_t b = 0; b < K; ++b)
        if (mask & (std::size_t{1} << b)) list[mask].labels.push_back(support[b]);
      list[mask].prob = probs[mask];
    }
  }
  return MultilabelSyntheticDistribution(M, C, K, std::move(pi), std::move(outs));
}

double noise_margin(const SyntheticDistribution& dist, std::int64_t i) {
  check_point(i, dist.num_points);
  const std::span<const double> e = dist.eta_row(i);
  double best = -kInf, second = -kInf;
  for (double v : e) {
    if (v > best) {
      second = best;
      best = v;
    } else if (v > second) {
      second = v;
    }
  }
  return best - second;  // 0 when the max is attained twice
}

double min_noise_margin(const SyntheticDistribution& dist) {
  double g = kInf;
  for (std::int64_t i = 0; i < dist.num_points; ++i)
    if (dist.pi[i] > 0) g = std::min(g, noise_margin(dist, i));
  return g;
}

double conditional_excess_01(const SyntheticDistribution& dist, std::int64_t i,
                             std::span<const double> p, const EmbeddingMatrix& m) {
  check_point(i, dist.num_points);
  check_matrix(m, dist.num_classes);
  const DecodeResult d = decode(p, m);
  const std::span<const double> e = dist.eta_row(i);
  return *std::max_element(e.begin(), e.end()) - e[d.label];
}

double conditional_excess_sq(const SyntheticDistribution& dist, std::int64_t i,
                             std::span<const double> p, const EmbeddingMatrix& m) {
  check_point(i, dist.num_points);
  check_matrix(m, dist.num_classes);
  const std::int64_t n = m.embed_dim;
  if (static_cast<std::int64_t>(p.size()) != n)
    throw DimensionError("conditional_excess_sq: query length mismatch");
  const std::span<const double> e = dist.eta_row(i);
  const std::vector<double> opt = embed_weights(e, m);
  const double closed = 0.5 * dist_sq(p.data(), opt.data(), n);

  // Same quantity as an expectation over the label draw, kept as a live
  // cross-check of the closed form.
  double direct = 0;
  for (std::int64_t c = 0; c < dist.num_classes; ++c) {
    const double* g = m.data.data() + c * n;
    direct += e[c] * 0.5 * (dist_sq(p.data(), g, n) - dist_sq(opt.data(), g, n));
  }
  if (std::abs(closed - direct) > 1e-9 * std::max(1.0, std::abs(closed)))
    throw Error("conditional_excess_sq: closed form " + std::to_string(closed) +
                " and direct expectation " + std::to_string(direct) + " disagree");
  return closed;
}

std::vector<double> bayes_optimal_table(const SyntheticDistribution& dist,
                                        const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  std::vector<double> out(static_cast<std::size_t>(dist.num_points) * m.embed_dim);
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::vector<double> row = embed_weights(dist.eta_row(i), m);
    std::copy(row.begin(), row.end(), out.begin() + i * m.embed_dim);
  }
  return out;
}

namespace {

void check_table(std::span<const double> f, std::int64_t M, std::int64_t n,
                 const char* where) {
  if (static_cast<std::int64_t>(f.size()) != M * n)
    throw DimensionError(std::string(where) + ": model table is not M x n");
}

}  // namespace

double excess_01_risk(std::span<const double> f, const SyntheticDistribution& dist,
                      const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "excess_01_risk");
  NearestColumnDecoder dec(m);
  double total = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const DecodeResult d =
        dec.decode(f.subspan(static_cast<std::size_t>(i * m.embed_dim),
                             static_cast<std::size_t>(m.embed_dim)));
    const std::span<const double> e = dist.eta_row(i);
    total += dist.pi[i] * (*std::max_element(e.begin(), e.end()) - e[d.label]);
  }
  return total;
}

double excess_sq_risk(std::span<const double> f, const SyntheticDistribution& dist,
                      const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "excess_sq_risk");
  double total = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::vector<double> opt = embed_weights(dist.eta_row(i), m);
    total += dist.pi[i] * 0.5 * dist_sq(f.data() + i * m.embed_dim, opt.data(), m.embed_dim);
  }
  return total;
}

double hamming_loss(std::span<const std::int32_t> a, std::span<const std::int32_t> b,
                    std::int64_t num_classes) {
  auto check = [num_classes](std::span<const std::int32_t> s) {
    std::int32_t prev = -1;
    for (std::int32_t c : s) {
      if (c <= prev || c < 0 || c >= num_classes)
        throw DomainError("hamming_loss: label sets must be strictly increasing in [0, C)");
      prev = c;
    }
  };
  check(a);
  check(b);
  std::size_t i = 0, j = 0;
  std::int64_t diff = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++diff;
      ++i;
    } else {
      ++diff;
      ++j;
    }
  }
  diff += static_cast<std::int64_t>((a.size() - i) + (b.size() - j));
  return static_cast<double>(diff) / static_cast<double>(num_classes);
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi > lo)) throw DomainError("geometric_grid: need 0 < lo < hi");
  if (count < 1) throw DomainError("geometric_grid: need count >= 1");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double ratio = hi / lo;
  for (int t = 1; t <= count; ++t)
    g[t - 1] = lo * std::pow(ratio, static_cast<double>(t) / count);
  g.back() = hi;
  return g;
}

namespace {

struct BoundAccumulator {
  ExcessRiskReport rep;
  bool first = true;

  void offer(double r, double t1, double t2, double t3) {
    const double rhs = t1 + t2 + t3;
    if (first || rhs < rep.rhs) {
      first = false;
      rep.r = r;
      rep.term1 = t1;
      rep.term2 = t2;
      rep.term3 = t3;
      rep.rhs = rhs;
    }
  }
};

}  // namespace

ExcessRiskReport multiclass_excess_bound(const SyntheticDistribution& dist,
                                         const EmbeddingMatrix& m, std::span<const double> f,
                                         double epsilon, std::span<const double> r_grid) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "multiclass_excess_bound");
  if (!(epsilon > 0 && epsilon < 1))
    throw DomainError("multiclass_excess_bound: epsilon must be in (0, 1)");
  const JlpReport cert = verify_jlp(m, epsilon / 4);
  if (!cert.passed)
    throw JlpViolationError("matrix distortion " + std::to_string(cert.epsilon_observed) +
                            " exceeds required " + std::to_string(epsilon / 4) +
                            "; the transfer bound is vacuous here");

  std::vector<double> grid(r_grid.begin(), r_grid.end());
  if (grid.empty()) grid = geometric_grid(epsilon, 1.0, 64);
  for (double r : grid)
    if (!(r > epsilon)) throw DomainError("multiclass_excess_bound: grid point <= epsilon");

  std::vector<double> margin(static_cast<std::size_t>(dist.num_points));
  for (std::int64_t i = 0; i < dist.num_points; ++i) margin[i] = noise_margin(dist, i);

  BoundAccumulator acc;
  acc.rep.excess_loss = excess_01_risk(f, dist, m);
  acc.rep.excess_sq = excess_sq_risk(f, dist, m);
  for (double r : grid) {
    double P = 0;
    for (std::int64_t i = 0; i < dist.num_points; ++i)
      if (margin[i] < r) P += dist.pi[i];
    const double t1 = epsilon * P;
    const double t2 = std::sqrt((8.0 * epsilon + 16.0) * P * acc.rep.excess_sq);
    const double t3 = (16.0 + 8.0 * epsilon) / ((r - epsilon) * (r - epsilon)) * acc.rep.excess_sq;
    acc.offer(r, t1, t2, t3);
  }
  acc.rep.holds = acc.rep.excess_loss <= acc.rep.rhs;
  return acc.rep;
}

ExcessRiskReport massart_excess_bound(const SyntheticDistribution& dist,
                                      const EmbeddingMatrix& m, std::span<const double> f,
                                      double epsilon) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "massart_excess_bound");
  if (!(epsilon > 0 && epsilon < 1))
    throw DomainError("massart_excess_bound: epsilon must be in (0, 1)");
  const double g = min_noise_margin(dist);
  if (!(g > epsilon))
    throw ConditionError("massart_excess_bound: min noise margin " + std::to_string(g) +
                         " does not exceed epsilon " + std::to_string(epsilon));
  const JlpReport cert = verify_jlp(m, epsilon / 4);
  if (!cert.passed)
    throw JlpViolationError("matrix distortion " + std::to_string(cert.epsilon_observed) +
                            " exceeds required " + std::to_string(epsilon / 4) +
                            "; the low-noise bound is vacuous here");

  ExcessRiskReport rep;
  rep.excess_loss = excess_01_risk(f, dist, m);
  rep.excess_sq = excess_sq_risk(f, dist, m);
  rep.r = g;
  rep.term3 = (16.0 + 8.0 * epsilon) / ((g - epsilon) * (g - epsilon)) * rep.excess_sq;
  rep.rhs = rep.term3;
  rep.holds = rep.excess_loss <= rep.rhs;
  return rep;
}

namespace {

// Everything the multilabel bound needs about the candidate space: the label
// sets of size <= K, their embeddings, and which of them the exact decoder
// can actually emit (the lexicographic representative of each group of
// bit-identical embeddings).
struct MlContext {
  std::vector<std::vector<std::int32_t>> sets;
  std::vector<double> embedded;  // sets.size() x n
  std::vector<std::size_t> achievable;
};

std::int64_t candidate_total_checked(std::int64_t C, std::int64_t K) {
  double binom = 1;
  std::int64_t total = 0;
  for (std::int64_t k = 0; k <= K; ++k) {
    total += static_cast<std::int64_t>(binom);
    if (total > 1000000)
      throw BudgetError("multilabel verification needs " + std::to_string(total) +
                        "+ candidates, limit is 1000000");
    binom = binom * static_cast<double>(C - k) / static_cast<double>(k + 1);
  }
  return total;
}

MlContext build_ml_context(const MultilabelSyntheticDistribution& dist,
                           const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  const std::int64_t C = dist.num_classes, K = std::min(dist.sparsity, dist.num_classes);
  const std::int64_t n = m.embed_dim;
  candidate_total_checked(C, K);

  MlContext ctx;
  ctx.sets.push_back({});
  std::vector<std::int32_t> cur;
  auto rec = [&](auto&& self, std::int64_t start, std::int64_t depth) -> void {
    for (std::int64_t c = start; c < C; ++c) {
      cur.push_back(static_cast<std::int32_t>(c));
      ctx.sets.push_back(cur);
      if (depth + 1 < K) self(self, c + 1, depth + 1);
      cur.pop_back();
    }
  };
  if (K > 0) rec(rec, 0, 0);

  const std::size_t S = ctx.sets.size();
  ctx.embedded.resize(S * static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < S; ++s) {
    const std::vector<double> v = embed_label_set(ctx.sets[s], m, K);
    std::copy(v.begin(), v.end(), ctx.embedded.begin() + s * static_cast<std::size_t>(n));
  }

  // A set is reachable as a decode output unless a lexicographically smaller
  // set embeds to the exact same bits.
  for (std::size_t s = 0; s < S; ++s) {
    bool shadowed = false;
    for (std::size_t t = 0; t < S && !shadowed; ++t) {
      if (t == s) continue;
      if (std::memcmp(ctx.embedded.data() + s * static_cast<std::size_t>(n),
                      ctx.embedded.data() + t * static_cast<std::size_t>(n),
                      sizeof(double) * static_cast<std::size_t>(n)) == 0 &&
          labelvec_less(ctx.sets[t], ctx.sets[s]))
        shadowed = true;
    }
    if (!shadowed) ctx.achievable.push_back(s);
  }
  return ctx;
}

// Conditional Hamming risk of emitting label set `s` at a point with the
// given marginals: (1/C) sum_c |1{c in s} - eta_c|.
double hamming_risk_value(std::span<const std::int32_t> s, std::span<const double> marg,
                          std::int64_t C) {
  double total = 0;
  for (double e : marg) total += e;
  for (std::int32_t c : s) total += 1.0 - 2.0 * marg[c];
  return total / static_cast<double>(C);
}

struct PointRisk {
  double best = kInf;
  double margin = kInf;  // gap to the second-best achievable value
};

PointRisk point_risk(const MlContext& ctx, std::span<const double> marg, std::int64_t C) {
  PointRisk pr;
  double second = kInf;
  for (std::size_t s : ctx.achievable) {
    const double v = hamming_risk_value(ctx.sets[s], marg, C);
    if (v < pr.best) {
      second = pr.best;
      pr.best = v;
    } else if (v > pr.best && v < second) {
      second = v;
    }
  }
  pr.margin = (second == kInf) ? kInf : second - pr.best;
  return pr;
}

}  // namespace

JlpReport verify_multilabel_family(const MultilabelSyntheticDistribution& dist,
                                   const EmbeddingMatrix& m, double eps_jlp) {
  check_matrix(m, dist.num_classes);
  const std::int64_t C = dist.num_classes;
  const MlContext ctx = build_ml_context(dist, m);
  const std::size_t S = ctx.sets.size();

  std::vector<double> dense(S * static_cast<std::size_t>(C), 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::int32_t c : ctx.sets[s]) dense[s * static_cast<std::size_t>(C) + c] = 1.0;

  std::vector<double> family;
  family.reserve(
      (S + S * (S - 1) / 2 + static_cast<std::size_t>(dist.num_points) * (S + 1)) *
      static_cast<std::size_t>(C));
  auto push = [&](auto&& fill) {
    const std::size_t at = family.size();
    family.resize(at + static_cast<std::size_t>(C), 0.0);
    fill(family.data() + at);
  };
  for (std::size_t s = 0; s < S; ++s)
    push([&](double* v) { std::copy_n(dense.data() + s * C, C, v); });
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t t = s + 1; t < S; ++t)
      push([&](double* v) {
        for (std::int64_t c = 0; c < C; ++c)
          v[c] = dense[s * static_cast<std::size_t>(C) + c] -
                 dense[t * static_cast<std::size_t>(C) + c];
      });
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::span<const double> marg = dist.marginal_row(i);
    push([&](double* v) { std::copy(marg.begin(), marg.end(), v); });
    for (std::size_t s = 0; s < S; ++s)
      push([&](double* v) {
        for (std::int64_t c = 0; c < C; ++c)
          v[c] = marg[c] - dense[s * static_cast<std::size_t>(C) + c];
      });
  }
  const std::int64_t members = static_cast<std::int64_t>(family.size()) / C;
  return verify_jlp_family(m, family, members, eps_jlp);
}

std::vector<double> multilabel_bayes_table(const MultilabelSyntheticDistribution& dist,
                                           const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  std::vector<double> out(static_cast<std::size_t>(dist.num_points) * m.embed_dim);
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::vector<double> row = embed_weights(dist.marginal_row(i), m);
    std::copy(row.begin(), row.end(), out.begin() + i * m.embed_dim);
  }
  return out;
}

double multilabel_noise_margin(const MultilabelSyntheticDistribution& dist, std::int64_t i,
                               const EmbeddingMatrix& m) {
  check_point(i, dist.num_points);
  const MlContext ctx = build_ml_context(dist, m);
  return point_risk(ctx, dist.marginal_row(i), dist.num_classes).margin;
}

double hamming_excess_risk(std::span<const double> f,
                           const MultilabelSyntheticDistribution& dist,
                           const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "hamming_excess_risk");
  const MlContext ctx = build_ml_context(dist, m);
  ExactMultilabelDecoder dec(m, dist.sparsity);
  double total = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const MultilabelDecodeResult d =
        dec.decode(f.subspan(static_cast<std::size_t>(i * m.embed_dim),
                             static_cast<std::size_t>(m.embed_dim)));
    const PointRisk pr = point_risk(ctx, dist.marginal_row(i), dist.num_classes);
    total +=
        dist.pi[i] *
        std::max(0.0, hamming_risk_value(d.labels, dist.marginal_row(i), dist.num_classes) -
                          pr.best);
  }
  return total;
}

double multilabel_excess_sq_risk(std::span<const double> f,
                                 const MultilabelSyntheticDistribution& dist,
                                 const EmbeddingMatrix& m) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "multilabel_excess_sq_risk");
  double total = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::vector<double> opt = embed_weights(dist.marginal_row(i), m);
    total += dist.pi[i] * 0.5 * dist_sq(f.data() + i * m.embed_dim, opt.data(), m.embed_dim);
  }
  return total;
}

ExcessRiskReport multilabel_excess_bound(const MultilabelSyntheticDistribution& dist,
                                         const EmbeddingMatrix& m, std::span<const double> f,
                                         double epsilon, std::span<const double> r_grid) {
  check_matrix(m, dist.num_classes);
  check_table(f, dist.num_points, m.embed_dim, "multilabel_excess_bound");
  if (!(epsilon > 0 && epsilon < 1))
    throw DomainError("multilabel_excess_bound: epsilon must be in (0, 1)");
  const std::int64_t C = dist.num_classes;
  const double K = static_cast<double>(dist.sparsity);
  const double eps_jlp = epsilon / (2.0 + 2.0 * std::sqrt(2.0));

  // Certify the distortion on the vectors the transfer argument actually
  // touches before asserting anything.
  {
    const JlpReport cert = verify_multilabel_family(dist, m, eps_jlp);
    if (!cert.passed)
      throw JlpViolationError("family distortion " + std::to_string(cert.epsilon_observed) +
                              " exceeds required " + std::to_string(eps_jlp) +
                              "; the Hamming transfer bound is vacuous here");
  }

  const MlContext ctx = build_ml_context(dist, m);

  const double r_floor = epsilon * K / static_cast<double>(C);
  std::vector<double> grid(r_grid.begin(), r_grid.end());
  if (grid.empty()) grid = geometric_grid(std::max(r_floor, 1e-300), 1.0, 64);
  for (double r : grid)
    if (!(r > r_floor)) throw DomainError("multilabel_excess_bound: grid point <= epsilon*K/C");

  std::vector<double> margin(static_cast<std::size_t>(dist.num_points));
  for (std::int64_t i = 0; i < dist.num_points; ++i)
    margin[i] = point_risk(ctx, dist.marginal_row(i), C).margin;

  BoundAccumulator acc;
  acc.rep.excess_loss = hamming_excess_risk(f, dist, m);
  acc.rep.excess_sq = multilabel_excess_sq_risk(f, dist, m);
  const double grow = 1.0 + eps_jlp;
  for (double r : grid) {
    double P = 0;
    for (std::int64_t i = 0; i < dist.num_points; ++i)
      if (margin[i] < r) P += dist.pi[i];
    const double t1 = epsilon * (K / static_cast<double>(C)) * P;
    const double t2 =
        4.0 / static_cast<double>(C) * std::sqrt(2.0 * K * grow * P * acc.rep.excess_sq);
    const double denom = static_cast<double>(C) * r - K * epsilon;
    const double t3 = 32.0 * K * grow / (denom * denom) * acc.rep.excess_sq;
    acc.offer(r, t1, t2, t3);
  }
  acc.rep.holds = acc.rep.excess_loss <= acc.rep.rhs;
  return acc.rep;
}

LemmaReport run_lemma_checks(const SyntheticDistribution& dist, const EmbeddingMatrix& m,
                             double epsilon, std::int64_t draws, std::uint64_t seed) {
  check_matrix(m, dist.num_classes);
  if (!(epsilon > 0 && epsilon < 1))
    throw DomainError("run_lemma_checks: epsilon must be in (0, 1)");
  if (draws < 1) throw DomainError("run_lemma_checks: need draws >= 1");
  const JlpReport cert = verify_jlp(m, epsilon / 4);
  if (!cert.passed)
    throw JlpViolationError("matrix distortion " + std::to_string(cert.epsilon_observed) +
                            " exceeds required " + std::to_string(epsilon / 4) +
                            "; lemma premises are not certified");

  const std::int64_t C = dist.num_classes, n = m.embed_dim, M = dist.num_points;
  const std::vector<double> bayes = bayes_optimal_table(dist, m);
  NearestColumnDecoder dec(m);
  CounterRng root{seed};

  LemmaReport rep;
  rep.epsilon = epsilon;
  rep.seed = seed;
  const double denom = 2.0 * std::sqrt(2.0 + epsilon);

  std::vector<double> eta(static_cast<std::size_t>(C));
  std::vector<double> spiky(static_cast<std::size_t>(C));
  std::vector<double> dir(static_cast<std::size_t>(n));
  std::vector<double> p(static_cast<std::size_t>(n));

  auto sample_direction = [&](const CounterRng& r, std::uint64_t base) {
    double norm = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      dir[i] = r.gaussian(base + static_cast<std::uint64_t>(i));
      norm += dir[i] * dir[i];
    }
    norm = std::sqrt(norm);
    for (std::int64_t i = 0; i < n; ++i) dir[i] /= norm;
  };
  auto place = [&](const double* center, double radius) {
    for (std::int64_t i = 0; i < n; ++i) p[i] = center[i] + radius * dir[i];
  };
  auto direct_excess_sq = [&](std::int64_t x, std::span<const double> q) {
    const double* opt = bayes.data() + x * n;
    const std::span<const double> e = dist.eta_row(x);
    double v = 0;
    for (std::int64_t c = 0; c < C; ++c) {
      const double* g = m.data.data() + c * n;
      v += e[c] * 0.5 * (dist_sq(q.data(), g, n) - dist_sq(opt, g, n));
    }
    return v;
  };

  // Each lemma gets its own derived stream per draw. Directions consume
  // gaussian counters 0..n-1 (uniform counters 0..2n-1 underneath), so
  // scalar draws in the same stream start at counter 2n.
  const std::uint64_t un = 2 * static_cast<std::uint64_t>(n);

  for (std::int64_t t = 0; t < draws; ++t) {
    const CounterRng d = root.derive(static_cast<std::uint64_t>(t));

    // Norm sandwich: |G(eta - e_j)|^2 within epsilon of |eta - e_j|^2.
    {
      const CounterRng d1 = d.derive(1);
      fill_dirichlet(eta, d1, 0);
      const std::int64_t j = static_cast<std::int64_t>(
          d1.below(static_cast<std::uint64_t>(C), static_cast<std::uint64_t>(C)));
      std::vector<double> ge = embed_weights(eta, m);
      const double* gj = m.data.data() + j * n;
      double sketch = 0, exact = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double z = ge[i] - gj[i];
        sketch += z * z;
      }
      for (std::int64_t c = 0; c < C; ++c) {
        const double z = eta[c] - (c == j ? 1.0 : 0.0);
        exact += z * z;
      }
      ++rep.norm_sandwich.draws;
      ++rep.norm_sandwich.premise_hits;
      if (sketch < exact - epsilon - 1e-10 || sketch > exact + epsilon + 1e-10)
        ++rep.norm_sandwich.violations;
    }

    // Distance preservation: a sharpened eta so the top gap can clear
    // epsilon, p near G eta, j a non-maximal class, k the maximal one.
    {
      const CounterRng d2 = d.derive(2);
      double s = 0;
      for (std::int64_t c = 0; c < C; ++c) {
        const double e2 = eta[c] * eta[c];
        spiky[c] = e2 * e2;
        s += spiky[c];
      }
      for (std::int64_t c = 0; c < C; ++c) spiky[c] /= s;
      const std::int64_t k =
          std::max_element(spiky.begin(), spiky.end()) - spiky.begin();
      std::int64_t j = static_cast<std::int64_t>(d2.below(un, static_cast<std::uint64_t>(C - 1)));
      if (j >= k) ++j;
      const std::vector<double> opt = embed_weights(spiky, m);
      const double lim = (spiky[k] - spiky[j] - epsilon) / denom;
      sample_direction(d2, 0);
      const double radius = d2.uniform(un + 1) * std::max(lim, 0.05) * 1.3;
      place(opt.data(), radius);
      ++rep.order_preservation.draws;
      if (radius < lim) {
        ++rep.order_preservation.premise_hits;
        const double* gj = m.data.data() + j * n;
        const double* gk = m.data.data() + k * n;
        if (!(dist_sq(p.data(), gj, n) > dist_sq(p.data(), gk, n)))
          ++rep.order_preservation.violations;
      }
    }

    // Conditional risk transfer at a support point: small squared excess
    // forces small 0-1 excess.
    {
      const CounterRng d3 = d.derive(3);
      const std::int64_t x =
          static_cast<std::int64_t>(d3.below(un, static_cast<std::uint64_t>(M)));
      const double r = epsilon + d3.uniform(un + 1) * (1.0 - epsilon);
      const double lim = (r - epsilon) / denom;
      sample_direction(d3, 0);
      const double radius = d3.uniform(un + 2) * lim * 1.3;
      place(bayes.data() + x * n, radius);
      const double c2 = direct_excess_sq(x, p);
      ++rep.risk_transfer.draws;
      if (c2 < (r - epsilon) * (r - epsilon) / (16.0 + 8.0 * epsilon)) {
        ++rep.risk_transfer.premise_hits;
        const std::span<const double> e = dist.eta_row(x);
        const double c1 = *std::max_element(e.begin(), e.end()) - e[dec.decode(p).label];
        if (!(c1 < r)) ++rep.risk_transfer.violations;
      }
    }

    // Sublevel radius: squared excess below half delta0^2 pins p within
    // delta0 of the optimum.
    {
      const CounterRng d4 = d.derive(4);
      const std::int64_t x =
          static_cast<std::int64_t>(d4.below(un, static_cast<std::uint64_t>(M)));
      const double delta0 = 0.05 + 0.95 * d4.uniform(un + 1);
      sample_direction(d4, 0);
      const double radius = d4.uniform(un + 2) * delta0 * 1.3;
      place(bayes.data() + x * n, radius);
      const double c2 = direct_excess_sq(x, p);
      ++rep.sublevel_radius.draws;
      if (c2 < 0.5 * delta0 * delta0) {
        ++rep.sublevel_radius.premise_hits;
        const double d2 = dist_sq(p.data(), bayes.data() + x * n, n);
        if (!(std::sqrt(d2) < delta0 * (1.0 + 1e-9))) ++rep.sublevel_radius.violations;
      }
    }
  }
  return rep;
}

}  // namespace jle
