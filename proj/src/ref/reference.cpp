#include "jle/ref.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>

#include "jle/errors.hpp"

namespace jle::ref {

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

std::vector<double> embed_set(std::span<const std::int32_t> set, const EmbeddingMatrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.embed_dim), 0.0);
  for (std::int32_t c : set) {
    const std::span<const double> g = m.column(c);
    for (std::int64_t j = 0; j < m.embed_dim; ++j) out[j] += g[j];
  }
  return out;
}

std::vector<double> embed_weights(std::span<const double> w, const EmbeddingMatrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.embed_dim), 0.0);
  for (std::int64_t c = 0; c < m.num_classes; ++c) {
    const std::span<const double> g = m.column(c);
    for (std::int64_t j = 0; j < m.embed_dim; ++j) out[j] += w[c] * g[j];
  }
  return out;
}

}  // namespace

double max_gram_distortion(const EmbeddingMatrix& m) {
  double worst = 0;
  for (std::int64_t i = 0; i < m.num_classes; ++i) {
    for (std::int64_t j = i; j < m.num_classes; ++j) {
      double dot = 0;
      for (std::int64_t k = 0; k < m.embed_dim; ++k)
        dot += m.data[i * m.embed_dim + k] * m.data[j * m.embed_dim + k];
      const double dev = std::abs(dot - (i == j ? 1.0 : 0.0));
      if (dev > worst) worst = dev;
    }
  }
  return worst;
}

DecodeResult decode_nearest(std::span<const double> p, const EmbeddingMatrix& m) {
  if (static_cast<std::int64_t>(p.size()) != m.embed_dim)
    throw DimensionError("decode_nearest: query length does not match embed_dim");
  DecodeResult r;
  for (std::int64_t c = 0; c < m.num_classes; ++c) {
    const double d = sq_distance(p, m.column(c));
    if (r.label < 0 || d < r.distance_sq) {
      r.runner_up = r.label;
      r.runner_up_distance_sq = r.label < 0 ? r.runner_up_distance_sq : r.distance_sq;
      r.label = c;
      r.distance_sq = d;
    } else if (r.runner_up < 0 || d < r.runner_up_distance_sq) {
      r.runner_up = c;
      r.runner_up_distance_sq = d;
    }
  }
  return r;
}

MultilabelDecodeResult decode_multilabel_lex(std::span<const double> p,
                                             const EmbeddingMatrix& m, std::int64_t sparsity) {
  if (static_cast<std::int64_t>(p.size()) != m.embed_dim)
    throw DimensionError("decode_multilabel_lex: query length does not match embed_dim");
  if (sparsity < 0) throw DomainError("decode_multilabel_lex: sparsity must be nonnegative");

  MultilabelDecodeResult best;
  bool have = false;
  std::vector<std::int32_t> set;

  // Depth-first with the 1-branch ahead of the 0-branch visits candidates in
  // the frozen order (the vector holding the earlier 1 is smaller), so a
  // strict improvement test keeps the lexicographically smallest of any
  // bit-equal distance tie.
  std::function<void(std::int64_t)> rec = [&](std::int64_t c) {
    if (c == m.num_classes) {
      const std::vector<double> emb = embed_set(set, m);
      const double d = sq_distance(p, emb);
      if (!have || d < best.distance_sq) {
        have = true;
        best.labels.assign(set.begin(), set.end());
        best.distance_sq = d;
      }
      return;
    }
    if (static_cast<std::int64_t>(set.size()) < sparsity) {
      set.push_back(static_cast<std::int32_t>(c));
      rec(c + 1);
      set.pop_back();
    }
    rec(c + 1);
  };
  rec(0);
  return best;
}

std::vector<double> ridge_solution(const RegressionDataset& data, double lambda2) {
  const std::int64_t N = data.rows();
  const std::int64_t D = data.features.num_features;
  const std::int64_t n = data.n;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, D);
  for (std::int64_t i = 0; i < N; ++i) {
    const auto idx = data.features.row_indices(i);
    const auto val = data.features.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) X(i, idx[k]) = val[k];
  }
  Eigen::MatrixXd T(N, n);
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t j = 0; j < n; ++j) T(i, j) = data.targets[i * n + j];

  const Eigen::MatrixXd A =
      X.transpose() * X + 2.0 * lambda2 * Eigen::MatrixXd::Identity(D, D);
  const Eigen::MatrixXd W = A.ldlt().solve(X.transpose() * T);

  std::vector<double> out(static_cast<std::size_t>(D * n));
  for (std::int64_t k = 0; k < D; ++k)
    for (std::int64_t j = 0; j < n; ++j) out[k * n + j] = W(k, j);
  return out;
}

double elastic_net_objective(const RegressionDataset& data, std::span<const double> w,
                             std::int64_t output, double lambda1, double lambda2) {
  const std::int64_t D = data.features.num_features;
  if (static_cast<std::int64_t>(w.size()) != D)
    throw DimensionError("elastic_net_objective: weight length does not match D");
  if (output < 0 || output >= data.n)
    throw DimensionError("elastic_net_objective: output column out of range");

  double loss = 0;
  for (std::int64_t i = 0; i < data.rows(); ++i) {
    const auto idx = data.features.row_indices(i);
    const auto val = data.features.row_values(i);
    double pred = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) pred += w[idx[k]] * val[k];
    const double r = pred - data.targets[i * data.n + output];
    loss += 0.5 * r * r;
  }
  double l1 = 0, l2 = 0;
  for (double v : w) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  return loss + lambda1 * l1 + lambda2 * l2;
}

std::vector<double> predict_dense(const LinearModel& model, std::span<const std::int32_t> idx,
                                  std::span<const double> val) {
  if (idx.size() != val.size())
    throw DimensionError("predict_dense: index and value lengths differ");
  std::vector<double> x(static_cast<std::size_t>(model.num_features), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= model.num_features)
      throw DimensionError("predict_dense: feature index outside model dimension");
    x[idx[k]] = val[k];
  }
  if (!model.feature_scale.empty())
    for (std::int64_t k = 0; k < model.num_features; ++k) x[k] *= model.feature_scale[k];

  std::vector<double> out(static_cast<std::size_t>(model.num_outputs), 0.0);
  if (!model.bias.empty()) out.assign(model.bias.begin(), model.bias.end());
  for (std::int64_t k = 0; k < model.num_features; ++k)
    for (std::int64_t j = 0; j < model.num_outputs; ++j)
      out[j] += x[k] * model.weights[k * model.num_outputs + j];
  return out;
}

double excess_01_direct(std::span<const double> f, const SyntheticDistribution& dist,
                        const EmbeddingMatrix& m) {
  // Risk and Bayes risk as separate expectations over (point, class) pairs.
  double risk = 0, bayes = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::span<const double> eta = dist.eta_row(i);
    const std::span<const double> row{f.data() + i * m.embed_dim,
                                      static_cast<std::size_t>(m.embed_dim)};
    const std::int64_t picked = decode_nearest(row, m).label;
    std::int64_t opt = 0;
    for (std::int64_t c = 1; c < dist.num_classes; ++c)
      if (eta[c] > eta[opt]) opt = c;
    for (std::int64_t c = 0; c < dist.num_classes; ++c) {
      if (c != picked) risk += dist.pi[i] * eta[c];
      if (c != opt) bayes += dist.pi[i] * eta[c];
    }
  }
  return risk - bayes;
}

double excess_sq_direct(std::span<const double> f, const SyntheticDistribution& dist,
                        const EmbeddingMatrix& m) {
  double risk = 0, bayes = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::span<const double> eta = dist.eta_row(i);
    const std::span<const double> row{f.data() + i * m.embed_dim,
                                      static_cast<std::size_t>(m.embed_dim)};
    const std::vector<double> opt = embed_weights(eta, m);
    for (std::int64_t c = 0; c < dist.num_classes; ++c) {
      risk += dist.pi[i] * eta[c] * 0.5 * sq_distance(row, m.column(c));
      bayes += dist.pi[i] * eta[c] * 0.5 * sq_distance(opt, m.column(c));
    }
  }
  return risk - bayes;
}

double hamming_excess_direct(std::span<const double> f,
                             const MultilabelSyntheticDistribution& dist,
                             const EmbeddingMatrix& m) {
  const std::int64_t C = dist.num_classes;

  // All candidate sets with at most K labels, in the frozen order.
  std::vector<std::vector<std::int32_t>> sets;
  std::vector<std::int32_t> acc;
  std::function<void(std::int64_t)> rec = [&](std::int64_t c) {
    if (c == C) {
      sets.push_back(acc);
      return;
    }
    if (static_cast<std::int64_t>(acc.size()) < dist.sparsity) {
      acc.push_back(static_cast<std::int32_t>(c));
      rec(c + 1);
      acc.pop_back();
    }
    rec(c + 1);
  };
  rec(0);

  std::vector<std::vector<double>> embedded;
  embedded.reserve(sets.size());
  for (const auto& s : sets) embedded.push_back(embed_set(s, m));

  // A candidate is achievable unless an earlier (smaller) set embeds to the
  // bit-identical vector; the decoder then never returns the later one.
  std::vector<bool> achievable(sets.size(), true);
  for (std::size_t a = 0; a < sets.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (std::memcmp(embedded[a].data(), embedded[b].data(),
                      embedded[a].size() * sizeof(double)) == 0 &&
          labelvec_less(sets[b], sets[a])) {
        achievable[a] = false;
        break;
      }

  const auto conditional = [&](std::int64_t i, const std::vector<std::int32_t>& b) {
    double r = 0;
    for (const auto& o : dist.outcomes[i])
      r += o.prob * hamming_loss(b, o.labels, C);
    return r;
  };

  double excess = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::span<const double> row{f.data() + i * m.embed_dim,
                                      static_cast<std::size_t>(m.embed_dim)};
    const MultilabelDecodeResult picked = decode_multilabel_lex(row, m, dist.sparsity);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sets.size(); ++s)
      if (achievable[s]) best = std::min(best, conditional(i, sets[s]));
    excess += dist.pi[i] * (conditional(i, picked.labels) - best);
  }
  return excess;
}

double multilabel_excess_sq_direct(std::span<const double> f,
                                   const MultilabelSyntheticDistribution& dist,
                                   const EmbeddingMatrix& m) {
  double risk = 0, bayes = 0;
  for (std::int64_t i = 0; i < dist.num_points; ++i) {
    const std::span<const double> row{f.data() + i * m.embed_dim,
                                      static_cast<std::size_t>(m.embed_dim)};
    const std::vector<double> opt = embed_weights(dist.marginal_row(i), m);
    for (const auto& o : dist.outcomes[i]) {
      const std::vector<double> target = embed_set(o.labels, m);
      risk += dist.pi[i] * o.prob * 0.5 * sq_distance(row, target);
      bayes += dist.pi[i] * o.prob * 0.5 * sq_distance(opt, target);
    }
  }
  return risk - bayes;
}

SparseDataset parse_svmlight_serial(std::string_view text) {
  SparseDataset d;
  std::int64_t max_col = -1;
  std::int64_t max_label = 0;  // 1-based

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::istringstream ls{line};
    std::string tok;
    if (!(ls >> tok)) continue;

    std::size_t pos = 0;
    long long label = 0;
    try {
      label = std::stoll(tok, &pos);
    } catch (...) {
      throw ParseError(line_no, "missing label before features");
    }
    if (pos != tok.size() || label < 1)
      throw ParseError(line_no, "label must be a positive integer");
    max_label = std::max<std::int64_t>(max_label, label);
    d.labels.push_back(static_cast<std::int32_t>(label - 1));

    std::int64_t prev = -1;
    while (ls >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(line_no, "feature token lacks a colon");
      long long idx1 = 0;
      try {
        idx1 = std::stoll(tok.substr(0, colon), &pos);
      } catch (...) {
        throw ParseError(line_no, "bad feature index");
      }
      if (pos != colon || idx1 < 1) throw ParseError(line_no, "bad feature index");
      const std::int64_t idx = idx1 - 1;
      if (idx <= prev) throw ParseError(line_no, "feature indices must increase");
      double v = 0;
      try {
        v = std::stod(tok.substr(colon + 1), &pos);
      } catch (...) {
        throw ParseError(line_no, "bad feature value");
      }
      if (pos != tok.size() - colon - 1) throw ParseError(line_no, "bad feature value");
      if (!std::isfinite(v)) throw ParseError(line_no, "feature value must be finite");
      d.col.push_back(static_cast<std::int32_t>(idx));
      d.val.push_back(v);
      prev = idx;
      max_col = std::max(max_col, idx);
    }
    d.row_ptr.push_back(static_cast<std::int64_t>(d.col.size()));
  }
  d.num_features = max_col + 1;
  d.num_classes = max_label;
  return d;
}

}  // namespace jle::ref
