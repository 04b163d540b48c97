#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "jle/sparse.hpp"

namespace jle {

// svmlight text format, one example per line:
//   <label> <index>:<value> <index>:<value> ...   # comment
// Labels and feature indices are 1-based in the file, 0-based in memory.
// Feature indices must be strictly increasing within a line. '#' starts a
// comment. The multilabel variant replaces <label> with a comma-separated
// list (possibly empty). Parsing is chunk-parallel over line ranges with an
// order-preserving merge; errors carry 1-based line numbers.
SparseDataset parse_svmlight(std::string_view text, int workers = 0);
MultilabelDataset parse_svmlight_multilabel(std::string_view text, int workers = 0);

SparseDataset load_svmlight(const std::string& path, int workers = 0);
MultilabelDataset load_svmlight_multilabel(const std::string& path, int workers = 0);

// Serialization round-trips exactly: values are written with shortest
// exact decimal form, labels and indices back to 1-based.
void write_svmlight(const SparseDataset& d, std::ostream& out);
void write_svmlight(const MultilabelDataset& d, std::ostream& out);
void save_svmlight(const SparseDataset& d, const std::string& path);
void save_svmlight(const MultilabelDataset& d, const std::string& path);

// Gaussian blobs: class c gets a random unit-norm center supported on a few
// random coordinates; each example is the center plus Gaussian noise on and
// near that support, stored sparse after dropping entries below a magnitude
// threshold. Deterministic in seed. Rows are grouped by class, labels 0-based.
SparseDataset synth_blobs(std::int64_t num_classes, std::int64_t num_features,
                          std::int64_t per_class, double noise, std::uint64_t seed);

struct SplitResult {
  SparseDataset train;
  SparseDataset test;
  std::vector<std::int64_t> train_class_counts;  // C entries
  std::vector<std::int64_t> test_class_counts;
};

// Seed-deterministic partition; rows keep their relative order inside each
// part. test_fraction in [0, 1).
SplitResult split(const SparseDataset& d, double test_fraction, std::uint64_t seed);

// Exact-match fraction over parallel label arrays.
double evaluate_accuracy(std::span<const std::int32_t> predicted,
                         std::span<const std::int32_t> truth);

struct DatasetStats {
  std::int64_t rows = 0;
  std::int64_t num_features = 0;
  std::int64_t num_classes = 0;
  std::int64_t nnz = 0;
  double density = 0;  // nnz / (rows * num_features)
};

DatasetStats stats(const SparseDataset& d);

}  // namespace jle
