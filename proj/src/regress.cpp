#include "jle/regress.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jle/errors.hpp"
#include "omp_util.hpp"

namespace jle {

namespace {

double soft(double rho, double l1) {
  if (rho > l1) return rho - l1;
  if (rho < -l1) return rho + l1;
  return 0.0;
}

// Column-compressed copy of the feature block. Built once per training run;
// coordinate descent walks columns, the row-major view cannot.
struct Csc {
  std::vector<std::int64_t> ptr;
  std::vector<std::int64_t> row;
  std::vector<double> val;  // scaled when normalization is on
  std::vector<double> sq;   // per-column squared norm of the scaled values
};

Csc build_csc(const FeatureView& f, const std::vector<double>& scale) {
  const std::int64_t N = f.num_rows, D = f.num_features;
  const std::int64_t nnz = f.row_ptr[N];
  Csc c;
  c.ptr.assign(static_cast<std::size_t>(D) + 1, 0);
  for (std::int64_t e = 0; e < nnz; ++e) {
    const std::int32_t k = f.col[e];
    if (k < 0 || k >= D)
      throw DimensionError("train: feature index " + std::to_string(k) +
                           " outside dimension " + std::to_string(D));
    ++c.ptr[static_cast<std::size_t>(k) + 1];
  }
  for (std::int64_t k = 0; k < D; ++k) c.ptr[k + 1] += c.ptr[k];
  c.row.resize(static_cast<std::size_t>(nnz));
  c.val.resize(static_cast<std::size_t>(nnz));
  std::vector<std::int64_t> cursor(c.ptr.begin(), c.ptr.end() - 1);
  for (std::int64_t i = 0; i < N; ++i) {
    for (std::int64_t e = f.row_ptr[i]; e < f.row_ptr[i + 1]; ++e) {
      const std::int32_t k = f.col[e];
      double v = f.val[e];
      if (!std::isfinite(v))
        throw DomainError("train: non-finite feature value in row " + std::to_string(i));
      if (!scale.empty()) v *= scale[k];
      const std::int64_t slot = cursor[k]++;
      c.row[slot] = i;
      c.val[slot] = v;
    }
  }
  c.sq.assign(static_cast<std::size_t>(D), 0.0);
  for (std::int64_t k = 0; k < D; ++k)
    for (std::int64_t e = c.ptr[k]; e < c.ptr[k + 1]; ++e) c.sq[k] += c.val[e] * c.val[e];
  return c;
}

std::vector<double> column_scales(const FeatureView& f) {
  const std::int64_t N = f.num_rows, D = f.num_features;
  std::vector<double> sq(static_cast<std::size_t>(D), 0.0);
  for (std::int64_t e = 0; e < f.row_ptr[N]; ++e) sq[f.col[e]] += f.val[e] * f.val[e];
  std::vector<double> scale(static_cast<std::size_t>(D), 1.0);
  for (std::int64_t k = 0; k < D; ++k)
    if (sq[k] > 0) scale[k] = 1.0 / std::sqrt(sq[k]);
  return scale;
}

}  // namespace

TrainResult train_detailed(const RegressionDataset& data, const TrainConfig& cfg) {
  const std::int64_t N = data.rows(), D = data.features.num_features, n = data.n;
  if (N == 0) throw DomainError("train: empty dataset");
  if (n <= 0 || static_cast<std::int64_t>(data.targets.size()) != N * n)
    throw DimensionError("train: target block is not rows x n");
  if (cfg.lambda1 < 0 || cfg.lambda2 < 0)
    throw DomainError("train: penalties must be >= 0");
  if (cfg.max_sweeps < 1) throw DomainError("train: max_sweeps must be >= 1");
  if (!(cfg.tolerance > 0)) throw DomainError("train: tolerance must be > 0");
  for (double t : data.targets)
    if (!std::isfinite(t)) throw DomainError("train: non-finite target value");

  std::vector<double> scale;
  if (cfg.normalize_features) scale = column_scales(data.features);
  const Csc X = build_csc(data.features, scale);

  TrainResult out;
  LinearModel& m = out.model;
  m.num_features = D;
  m.num_outputs = n;
  m.weights.assign(static_cast<std::size_t>(D) * n, 0.0);
  if (cfg.fit_bias) m.bias.assign(static_cast<std::size_t>(n), 0.0);
  m.feature_scale = scale;
  m.lambda1 = cfg.lambda1;
  m.lambda2 = cfg.lambda2;
  out.column_sweeps.assign(static_cast<std::size_t>(n), 0);
  if (cfg.record_objective) out.objective_trace.resize(static_cast<std::size_t>(n));

  const int nt = effective_workers(cfg.workers);
  // Output columns are independent single-output problems; nothing below
  // this line is shared mutable state, so any worker count gives the same
  // bits.
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::int64_t j = 0; j < n; ++j) {
    std::vector<double> w(static_cast<std::size_t>(D), 0.0);
    std::vector<double> resid(static_cast<std::size_t>(N));
    for (std::int64_t i = 0; i < N; ++i) resid[i] = data.targets[i * n + j];
    double bias = 0.0;

    std::int64_t used = 0;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      double max_move = 0.0;
      if (cfg.fit_bias) {
        double s = 0.0;
        for (std::int64_t i = 0; i < N; ++i) s += resid[i];
        const double delta = s / static_cast<double>(N);
        bias += delta;
        for (std::int64_t i = 0; i < N; ++i) resid[i] -= delta;
        max_move = std::abs(delta);
      }
      for (std::int64_t k = 0; k < D; ++k) {
        if (X.sq[k] == 0.0) continue;
        double rho = w[k] * X.sq[k];
        for (std::int64_t e = X.ptr[k]; e < X.ptr[k + 1]; ++e)
          rho += X.val[e] * resid[X.row[e]];
        const double wk = soft(rho, cfg.lambda1) / (X.sq[k] + 2.0 * cfg.lambda2);
        if (wk != w[k]) {
          const double delta = wk - w[k];
          for (std::int64_t e = X.ptr[k]; e < X.ptr[k + 1]; ++e)
            resid[X.row[e]] -= delta * X.val[e];
          w[k] = wk;
          max_move = std::max(max_move, std::abs(delta));
        }
      }
      ++used;
      if (cfg.record_objective) {
        double obj = 0.0;
        for (std::int64_t i = 0; i < N; ++i) obj += resid[i] * resid[i];
        obj *= 0.5;
        for (std::int64_t k = 0; k < D; ++k)
          obj += cfg.lambda1 * std::abs(w[k]) + cfg.lambda2 * w[k] * w[k];
        out.objective_trace[j].push_back(obj);
      }
      if (max_move < cfg.tolerance) break;
    }

    for (std::int64_t k = 0; k < D; ++k) m.weights[k * n + j] = w[k];
    if (cfg.fit_bias) m.bias[j] = bias;
    out.column_sweeps[j] = used;
  }

  m.sweeps_run = 0;
  for (std::int64_t s : out.column_sweeps) m.sweeps_run = std::max(m.sweeps_run, s);
  return out;
}

LinearModel train(const RegressionDataset& data, const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.record_objective = false;
  return std::move(train_detailed(data, c).model);
}

void LinearModel::predict(std::span<const std::int32_t> idx, std::span<const double> val,
                          std::span<double> out) const {
  if (idx.size() != val.size())
    throw DimensionError("predict: index and value arrays differ in length");
  if (static_cast<std::int64_t>(out.size()) != num_outputs)
    throw DimensionError("predict: output buffer has wrong length");
  if (bias.empty())
    std::fill(out.begin(), out.end(), 0.0);
  else
    std::copy(bias.begin(), bias.end(), out.begin());
  for (std::size_t t = 0; t < idx.size(); ++t) {
    const std::int32_t k = idx[t];
    if (k < 0 || k >= num_features)
      throw DimensionError("predict: feature index " + std::to_string(k) +
                           " outside model dimension " + std::to_string(num_features));
    double v = val[t];
    if (!feature_scale.empty()) v *= feature_scale[k];
    const double* wr = weights.data() + static_cast<std::int64_t>(k) * num_outputs;
    for (std::int64_t j = 0; j < num_outputs; ++j) out[j] += v * wr[j];
  }
}

std::vector<double> LinearModel::predict(std::span<const std::int32_t> idx,
                                         std::span<const double> val) const {
  std::vector<double> out(static_cast<std::size_t>(num_outputs));
  predict(idx, val, out);
  return out;
}

double surrogate_risk(const LinearModel& model, const RegressionDataset& data, int workers) {
  const std::int64_t N = data.rows();
  if (N == 0) throw DomainError("surrogate_risk: empty dataset");
  if (model.num_outputs != data.n)
    throw DimensionError("surrogate_risk: model outputs " + std::to_string(model.num_outputs) +
                         " but targets have width " + std::to_string(data.n));

  std::vector<double> loss(static_cast<std::size_t>(N));
  const int nt = effective_workers(workers);
#pragma omp parallel num_threads(nt)
  {
    std::vector<double> p(static_cast<std::size_t>(model.num_outputs));
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < N; ++i) {
      model.predict(data.features.row_indices(i), data.features.row_values(i), p);
      const std::span<const double> t = data.target_row(i);
      double s = 0.0;
      for (std::int64_t j = 0; j < data.n; ++j) {
        const double d = p[j] - t[j];
        s += d * d;
      }
      loss[i] = 0.5 * s;
    }
  }
  double total = 0.0;  // fixed summation order, independent of worker count
  for (std::int64_t i = 0; i < N; ++i) total += loss[i];
  return total / static_cast<double>(N);
}

std::vector<double> predict_all(const LinearModel& model, const FeatureView& features,
                                int workers) {
  const std::int64_t N = features.num_rows, n = model.num_outputs;
  std::vector<double> out(static_cast<std::size_t>(N) * n);
  const int nt = effective_workers(workers);
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < N; ++i)
    model.predict(features.row_indices(i), features.row_values(i),
                  std::span<double>(out.data() + i * n, static_cast<std::size_t>(n)));
  return out;
}

}  // namespace jle
