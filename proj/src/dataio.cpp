#include "jle/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "jle/errors.hpp"
#include "jle/io.hpp"
#include "jle/rng.hpp"
#include "omp_util.hpp"

namespace jle {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

struct LineRange {
  const char* b;
  const char* e;
};

// Line table over the whole text; comments kept, stripped during parsing so
// error messages can still point at the full line.
std::vector<LineRange> split_lines(std::string_view text) {
  std::vector<LineRange> lines;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    const char* nl = static_cast<const char*>(std::memchr(p, '\n', static_cast<std::size_t>(end - p)));
    const char* stop = nl ? nl : end;
    lines.push_back({p, stop});
    p = nl ? nl + 1 : end;
  }
  return lines;
}

// Trims the comment and the trailing CR; returns false when nothing is left
// and the line should be skipped entirely.
bool effective_range(LineRange& l) {
  const char* hash =
      static_cast<const char*>(std::memchr(l.b, '#', static_cast<std::size_t>(l.e - l.b)));
  if (hash) l.e = hash;
  if (l.e > l.b && l.e[-1] == '\r') --l.e;
  return l.b != l.e;
}

std::int64_t parse_positive_int(const char* b, const char* e, std::size_t line_no,
                                const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || v < 1)
    throw ParseError(line_no, std::string("bad ") + what + " '" + std::string(b, e) +
                                  "', expected a positive integer");
  return v;
}

struct Partial {
  std::vector<std::int64_t> row_sizes;
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::vector<std::int32_t> labels;       // multiclass
  std::vector<std::int64_t> label_sizes;  // multilabel
  std::vector<std::int32_t> label_idx;
  std::int64_t max_col = -1;   // 0-based
  std::int64_t max_label = 0;  // 1-based
  std::int64_t max_set = 0;
};

// Parses the feature tail "idx:val idx:val ...", 1-based strictly increasing
// indices, finite values.
void parse_features(const char* p, const char* e, std::size_t line_no, Partial& out) {
  std::int64_t count = 0;
  std::int64_t prev = -1;
  while (p < e) {
    while (p < e && is_blank(*p)) ++p;
    if (p == e) break;
    const char* tok = p;
    while (p < e && !is_blank(*p)) ++p;
    const char* colon =
        static_cast<const char*>(std::memchr(tok, ':', static_cast<std::size_t>(p - tok)));
    if (!colon)
      throw ParseError(line_no, "feature token '" + std::string(tok, p) + "' has no ':'");
    const std::int64_t idx1 = parse_positive_int(tok, colon, line_no, "feature index");
    if (idx1 > 2147483647)
      throw ParseError(line_no, "feature index " + std::to_string(idx1) + " too large");
    const std::int64_t idx = idx1 - 1;
    if (idx <= prev)
      throw ParseError(line_no, "feature indices must be strictly increasing, saw " +
                                    std::to_string(idx1) + " after " + std::to_string(prev + 1));
    double v = 0;
    const auto [ptr, ec] = std::from_chars(colon + 1, p, v);
    if (ec != std::errc() || ptr != p)
      throw ParseError(line_no, "bad feature value '" + std::string(colon + 1, p) + "'");
    if (!std::isfinite(v))
      throw ParseError(line_no, "non-finite feature value '" + std::string(colon + 1, p) + "'");
    out.col.push_back(static_cast<std::int32_t>(idx));
    out.val.push_back(v);
    prev = idx;
    ++count;
  }
  out.row_sizes.push_back(count);
  out.max_col = std::max(out.max_col, prev);
}

void parse_line_multiclass(LineRange l, std::size_t line_no, Partial& out) {
  const char* p = l.b;
  while (p < l.e && is_blank(*p)) ++p;
  const char* tok = p;
  while (p < l.e && !is_blank(*p)) ++p;
  if (tok == p || std::memchr(tok, ':', static_cast<std::size_t>(p - tok)))
    throw ParseError(line_no, "missing label");
  const std::int64_t label = parse_positive_int(tok, p, line_no, "label");
  out.labels.push_back(static_cast<std::int32_t>(label - 1));
  out.max_label = std::max(out.max_label, label);
  parse_features(p, l.e, line_no, out);
}

void parse_line_multilabel(LineRange l, std::size_t line_no, Partial& out) {
  const char* p = l.b;
  const char* tok = p;
  while (p < l.e && !is_blank(*p)) ++p;
  // A token containing ':' is already a feature: the label list is empty.
  if (std::memchr(tok, ':', static_cast<std::size_t>(p - tok))) p = tok;

  std::vector<std::int32_t> set;
  for (const char* q = tok; q < p;) {
    const char* comma =
        static_cast<const char*>(std::memchr(q, ',', static_cast<std::size_t>(p - q)));
    const char* stop = comma ? comma : p;
    if (q != stop) {
      const std::int64_t label = parse_positive_int(q, stop, line_no, "label");
      set.push_back(static_cast<std::int32_t>(label - 1));
      out.max_label = std::max(out.max_label, label);
    }
    q = comma ? comma + 1 : p;
  }
  std::sort(set.begin(), set.end());
  if (std::adjacent_find(set.begin(), set.end()) != set.end())
    throw ParseError(line_no, "duplicate label in label list");
  out.label_sizes.push_back(static_cast<std::int64_t>(set.size()));
  out.max_set = std::max(out.max_set, static_cast<std::int64_t>(set.size()));
  out.label_idx.insert(out.label_idx.end(), set.begin(), set.end());
  parse_features(p, l.e, line_no, out);
}

struct ChunkError {
  std::size_t line = 0;
  std::string message;
};

// Runs `parse_line` over line chunks in parallel; chunk boundaries do not
// affect the merged result because lines are independent and merged in
// order. On errors, the smallest line number wins.
template <typename Fn>
std::vector<Partial> parse_chunks(const std::vector<LineRange>& lines, int workers, Fn parse_line) {
  const int nt = effective_workers(workers);
  const std::int64_t nlines = static_cast<std::int64_t>(lines.size());
  const std::int64_t nchunks = std::min<std::int64_t>(nt, std::max<std::int64_t>(nlines, 1));
  const std::int64_t step = (nlines + nchunks - 1) / nchunks;

  std::vector<Partial> parts(static_cast<std::size_t>(nchunks));
  std::vector<ChunkError> errors(static_cast<std::size_t>(nchunks));
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t c = 0; c < nchunks; ++c) {
    const std::int64_t lo = c * step, hi = std::min(nlines, lo + step);
    try {
      for (std::int64_t i = lo; i < hi; ++i) {
        LineRange l = lines[i];
        if (!effective_range(l)) continue;
        parse_line(l, static_cast<std::size_t>(i + 1), parts[c]);
      }
    } catch (const ParseError& e) {
      errors[c] = {e.line, e.what()};
    }
  }
  const ChunkError* first = nullptr;
  for (const ChunkError& e : errors)
    if (e.line && (!first || e.line < first->line)) first = &e;
  if (first) {
    // The stored message already carries the "line N:" prefix.
    throw ParseError(first->line, first->message.substr(first->message.find(": ") + 2));
  }
  return parts;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return std::move(ss).str();
}

void write_value(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

SparseDataset parse_svmlight(std::string_view text, int workers) {
  const std::vector<LineRange> lines = split_lines(text);
  const std::vector<Partial> parts = parse_chunks(lines, workers, parse_line_multiclass);

  SparseDataset d;
  for (const Partial& p : parts) {
    d.num_features = std::max(d.num_features, p.max_col + 1);
    d.num_classes = std::max(d.num_classes, p.max_label);
    for (std::int64_t s : p.row_sizes) d.row_ptr.push_back(d.row_ptr.back() + s);
    d.col.insert(d.col.end(), p.col.begin(), p.col.end());
    d.val.insert(d.val.end(), p.val.begin(), p.val.end());
    d.labels.insert(d.labels.end(), p.labels.begin(), p.labels.end());
  }
  return d;
}

MultilabelDataset parse_svmlight_multilabel(std::string_view text, int workers) {
  const std::vector<LineRange> lines = split_lines(text);
  const std::vector<Partial> parts = parse_chunks(lines, workers, parse_line_multilabel);

  MultilabelDataset d;
  for (const Partial& p : parts) {
    d.num_features = std::max(d.num_features, p.max_col + 1);
    d.num_classes = std::max(d.num_classes, p.max_label);
    d.sparsity = std::max(d.sparsity, p.max_set);
    for (std::int64_t s : p.row_sizes) d.row_ptr.push_back(d.row_ptr.back() + s);
    for (std::int64_t s : p.label_sizes) d.label_ptr.push_back(d.label_ptr.back() + s);
    d.col.insert(d.col.end(), p.col.begin(), p.col.end());
    d.val.insert(d.val.end(), p.val.begin(), p.val.end());
    d.label_idx.insert(d.label_idx.end(), p.label_idx.begin(), p.label_idx.end());
  }
  return d;
}

SparseDataset load_svmlight(const std::string& path, int workers) {
  return parse_svmlight(read_file(path), workers);
}

MultilabelDataset load_svmlight_multilabel(const std::string& path, int workers) {
  return parse_svmlight_multilabel(read_file(path), workers);
}

void write_svmlight(const SparseDataset& d, std::ostream& out) {
  for (std::int64_t i = 0; i < d.rows(); ++i) {
    out << (d.labels[i] + 1);
    const auto idx = d.row_indices(i);
    const auto val = d.row_values(i);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      out << ' ' << (idx[t] + 1) << ':';
      write_value(out, val[t]);
    }
    out << '\n';
  }
}

void write_svmlight(const MultilabelDataset& d, std::ostream& out) {
  for (std::int64_t i = 0; i < d.rows(); ++i) {
    const auto labels = d.row_labels(i);
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (t) out << ',';
      out << (labels[t] + 1);
    }
    const auto idx = d.row_indices(i);
    const auto val = d.row_values(i);
    // A fully empty row still needs a non-blank line to survive re-parsing.
    if (labels.empty() && idx.empty()) out << ' ';
    for (std::size_t t = 0; t < idx.size(); ++t) {
      out << ' ' << (idx[t] + 1) << ':';
      write_value(out, val[t]);
    }
    out << '\n';
  }
}

namespace {

template <typename Dataset>
void save_text(const Dataset& d, const std::string& path) {
  std::ostringstream ss;
  write_svmlight(d, ss);
  atomic_write_file(path, std::move(ss).str());
}

}  // namespace

void save_svmlight(const SparseDataset& d, const std::string& path) { save_text(d, path); }
void save_svmlight(const MultilabelDataset& d, const std::string& path) { save_text(d, path); }

SparseDataset synth_blobs(std::int64_t num_classes, std::int64_t num_features,
                          std::int64_t per_class, double noise, std::uint64_t seed) {
  if (num_classes < 2) throw DimensionError("synth_blobs: need at least 2 classes");
  if (num_features < 1) throw DimensionError("synth_blobs: need at least 1 feature");
  if (per_class < 0) throw DomainError("synth_blobs: per_class must be >= 0");
  if (!(noise >= 0) || !std::isfinite(noise))
    throw DomainError("synth_blobs: noise must be finite and >= 0");

  const std::int64_t support = std::min<std::int64_t>(num_features, 10);
  constexpr double kDropBelow = 1e-4;
  CounterRng root{seed};

  SparseDataset d;
  d.num_features = num_features;
  d.num_classes = num_classes;

  std::vector<std::int32_t> coords(static_cast<std::size_t>(num_features));
  std::vector<std::int32_t> where(static_cast<std::size_t>(support));
  std::vector<double> center(static_cast<std::size_t>(support));
  std::vector<std::pair<std::int32_t, double>> row;

  for (std::int64_t c = 0; c < num_classes; ++c) {
    const CounterRng cls = root.derive(static_cast<std::uint64_t>(c));
    for (std::int64_t i = 0; i < num_features; ++i) coords[i] = static_cast<std::int32_t>(i);
    for (std::int64_t t = 0; t < support; ++t) {
      const std::uint64_t j = cls.below(static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(num_features - t));
      std::swap(coords[t], coords[t + static_cast<std::int64_t>(j)]);
      where[t] = coords[t];
    }
    std::sort(where.begin(), where.end());
    double norm = 0;
    for (std::int64_t t = 0; t < support; ++t) {
      center[t] = cls.gaussian(1000 + static_cast<std::uint64_t>(t));
      norm += center[t] * center[t];
    }
    norm = std::sqrt(norm);
    for (double& v : center) v /= norm;  // unit-norm center

    const CounterRng ex = cls.derive(1);
    for (std::int64_t r = 0; r < per_class; ++r) {
      row.clear();
      const std::uint64_t base = static_cast<std::uint64_t>(r) * (support + 2);
      for (std::int64_t t = 0; t < support; ++t) {
        const double v = center[t] + noise * ex.gaussian(base + static_cast<std::uint64_t>(t));
        if (std::abs(v) >= kDropBelow) row.emplace_back(where[t], v);
      }
      if (noise > 0) {
        // Two stray coordinates so rows are not confined to the support.
        const CounterRng st = cls.derive(2);
        for (int t = 0; t < 2; ++t) {
          const std::uint64_t k = static_cast<std::uint64_t>(r) * 4 + static_cast<std::uint64_t>(t);
          const std::int32_t at = static_cast<std::int32_t>(
              st.below(k * 2, static_cast<std::uint64_t>(num_features)));
          const double v = noise * st.gaussian(1000000 + k);
          if (std::abs(v) >= kDropBelow &&
              std::find(where.begin(), where.end(), at) == where.end())
            row.emplace_back(at, v);
        }
      }
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                row.end());
      for (const auto& [idx, v] : row) {
        d.col.push_back(idx);
        d.val.push_back(v);
      }
      d.row_ptr.push_back(d.row_ptr.back() + static_cast<std::int64_t>(row.size()));
      d.labels.push_back(static_cast<std::int32_t>(c));
    }
  }
  return d;
}

namespace {

void append_row(SparseDataset& dst, const SparseDataset& src, std::int64_t i) {
  const auto idx = src.row_indices(i);
  const auto val = src.row_values(i);
  dst.col.insert(dst.col.end(), idx.begin(), idx.end());
  dst.val.insert(dst.val.end(), val.begin(), val.end());
  dst.row_ptr.push_back(dst.row_ptr.back() + static_cast<std::int64_t>(idx.size()));
  dst.labels.push_back(src.labels[i]);
}

}  // namespace

SplitResult split(const SparseDataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0 && test_fraction < 1))
    throw DomainError("split: test_fraction must be in [0, 1)");
  const std::int64_t N = d.rows();
  const std::int64_t ntest = static_cast<std::int64_t>(
      std::llround(test_fraction * static_cast<double>(N)));

  std::vector<std::int64_t> order(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) order[i] = i;
  CounterRng rng{seed};
  for (std::int64_t t = 0; t < N; ++t) {
    const std::uint64_t j =
        rng.below(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(N - t));
    std::swap(order[t], order[t + static_cast<std::int64_t>(j)]);
  }
  std::vector<char> is_test(static_cast<std::size_t>(N), 0);
  for (std::int64_t t = 0; t < ntest; ++t) is_test[order[t]] = 1;

  SplitResult out;
  out.train.num_features = out.test.num_features = d.num_features;
  out.train.num_classes = out.test.num_classes = d.num_classes;
  out.train_class_counts.assign(static_cast<std::size_t>(d.num_classes), 0);
  out.test_class_counts.assign(static_cast<std::size_t>(d.num_classes), 0);
  for (std::int64_t i = 0; i < N; ++i) {
    if (is_test[i]) {
      append_row(out.test, d, i);
      ++out.test_class_counts[d.labels[i]];
    } else {
      append_row(out.train, d, i);
      ++out.train_class_counts[d.labels[i]];
    }
  }
  return out;
}

double evaluate_accuracy(std::span<const std::int32_t> predicted,
                         std::span<const std::int32_t> truth) {
  if (predicted.size() != truth.size())
    throw DimensionError("evaluate_accuracy: arrays differ in length");
  if (predicted.empty()) throw DomainError("evaluate_accuracy: empty input");
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

DatasetStats stats(const SparseDataset& d) {
  DatasetStats s;
  s.rows = d.rows();
  s.num_features = d.num_features;
  s.num_classes = d.num_classes;
  s.nnz = d.nnz();
  s.density = (s.rows > 0 && s.num_features > 0)
                  ? static_cast<double>(s.nnz) /
                        (static_cast<double>(s.rows) * static_cast<double>(s.num_features))
                  : 0.0;
  return s;
}

}  // namespace jle
