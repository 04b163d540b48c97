#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jle/sparse.hpp"

namespace jle {

// Anything that maps a sparse feature row to an n-vector. The decode
// pipeline is written against this, so other model families can slot in;
// only the linear model ships.
struct Regressor {
  virtual ~Regressor() = default;
  virtual std::int64_t feature_dim() const = 0;
  virtual std::int64_t output_dim() const = 0;
  virtual void predict(std::span<const std::int32_t> idx, std::span<const double> val,
                       std::span<double> out) const = 0;
};

struct LinearModel final : Regressor {
  std::int64_t num_features = 0;  // D
  std::int64_t num_outputs = 0;   // n
  std::vector<double> weights;    // D x n row-major: weight(feature k, output j) = weights[k*n+j]
  std::vector<double> bias;          // n entries when fitted, else empty
  std::vector<double> feature_scale; // D entries when normalization was on, else empty
  double lambda1 = 0;
  double lambda2 = 0;
  std::int64_t sweeps_run = 0;  // max sweeps any output column used

  std::int64_t feature_dim() const override { return num_features; }
  std::int64_t output_dim() const override { return num_outputs; }
  void predict(std::span<const std::int32_t> idx, std::span<const double> val,
               std::span<double> out) const override;
  std::vector<double> predict(std::span<const std::int32_t> idx,
                              std::span<const double> val) const;
};

struct TrainConfig {
  double lambda1 = 0;
  double lambda2 = 0;
  int max_sweeps = 50;
  double tolerance = 1e-5;  // stop a column when its largest coordinate move is below this
  int workers = 0;          // 0 = library default
  bool fit_bias = false;
  bool normalize_features = false;  // per-feature l2 scaling, stored in the model
  bool record_objective = false;    // per-sweep objective traces (diagnostics)
};

// Cyclic coordinate descent with soft thresholding, one independent problem
// per output column:
//   min_w 1/2 sum_i (<w,x_i> - t_ij)^2 + lambda1 |w|_1 + lambda2 |w|_2^2.
// Columns never communicate, so results are bitwise identical for any
// worker count.
LinearModel train(const RegressionDataset& data, const TrainConfig& cfg);

struct TrainResult {
  LinearModel model;
  std::vector<std::vector<double>> objective_trace;  // per column, when recorded
  std::vector<std::int64_t> column_sweeps;
};

TrainResult train_detailed(const RegressionDataset& data, const TrainConfig& cfg);

// (1/N) sum_i 1/2 |predict(x_i) - t_i|^2. Per-row losses are accumulated in
// row order regardless of worker count.
double surrogate_risk(const LinearModel& model, const RegressionDataset& data, int workers = 0);

// Dense row-major rows() x output_dim prediction block.
std::vector<double> predict_all(const LinearModel& model, const FeatureView& features,
                                int workers = 0);

}  // namespace jle
