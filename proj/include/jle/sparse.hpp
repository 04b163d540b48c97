#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace jle {

// Row-compressed sparse dataset. Feature indices are 0-based and strictly
// increasing within a row. Labels are 0-based internally; the svmlight
// parser/serializer is the only place the external 1-based convention
// appears.
struct SparseDataset {
  std::int64_t num_features = 0;  // D
  std::int64_t num_classes = 0;   // C

  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::vector<std::int32_t> labels;  // one per row, in [0, C)

  std::int64_t rows() const { return static_cast<std::int64_t>(labels.size()); }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }

  std::span<const std::int32_t> row_indices(std::int64_t i) const {
    return {col.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_values(std::int64_t i) const {
    return {val.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }

  bool operator==(const SparseDataset&) const = default;
};

// Multilabel variant: each row has a sorted set of active labels, at most
// `sparsity` of them.
struct MultilabelDataset {
  std::int64_t num_features = 0;
  std::int64_t num_classes = 0;
  std::int64_t sparsity = 0;  // K, max active labels seen in any row

  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::vector<std::int64_t> label_ptr{0};
  std::vector<std::int32_t> label_idx;  // 0-based, sorted within a row

  std::int64_t rows() const { return static_cast<std::int64_t>(label_ptr.size()) - 1; }

  std::span<const std::int32_t> row_indices(std::int64_t i) const {
    return {col.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_values(std::int64_t i) const {
    return {val.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const std::int32_t> row_labels(std::int64_t i) const {
    return {label_idx.data() + label_ptr[i],
            static_cast<std::size_t>(label_ptr[i + 1] - label_ptr[i])};
  }

  bool operator==(const MultilabelDataset&) const = default;
};

// Read-only view of the feature block of either dataset type. Keeps the
// source alive through `owner`, so embedding a dataset shares features
// instead of copying them.
struct FeatureView {
  std::shared_ptr<const void> owner;
  const std::int64_t* row_ptr = nullptr;
  const std::int32_t* col = nullptr;
  const double* val = nullptr;
  std::int64_t num_rows = 0;
  std::int64_t num_features = 0;

  std::span<const std::int32_t> row_indices(std::int64_t i) const {
    return {col + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_values(std::int64_t i) const {
    return {val + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
};

FeatureView features_of(std::shared_ptr<const SparseDataset> d);
FeatureView features_of(std::shared_ptr<const MultilabelDataset> d);

// Regression view of a classification dataset: shared features plus a dense
// row-major rows() x n target block.
struct RegressionDataset {
  FeatureView features;
  std::vector<double> targets;
  std::int64_t n = 0;

  std::int64_t rows() const { return features.num_rows; }
  std::span<const double> target_row(std::int64_t i) const {
    return {targets.data() + i * n, static_cast<std::size_t>(n)};
  }
};

}  // namespace jle
