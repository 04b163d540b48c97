// Command-line front end. Orchestration and argument plumbing only: all the
// actual work lives in the library, every output artifact is staged and
// renamed so a failed run leaves nothing behind.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jle/campaigns.hpp"
#include "jle/dataio.hpp"
#include "jle/decode.hpp"
#include "jle/embedding.hpp"
#include "jle/errors.hpp"
#include "jle/io.hpp"
#include "jle/regress.hpp"
#include "jle/risklab.hpp"
#include "json.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct TrainArgs {
  std::string data, model_path, matrix_path;
  bool multilabel = false;
  std::int64_t embed_dim = 0;
  double epsilon = 0, delta = 0.05, c0 = 4.0;
  std::string kind = "rademacher";
  std::uint64_t seed = 1;
  double l1 = 0, l2 = 0;
  int iters = 50;
  double tol = 1e-5;
  int workers = 0;
  bool bias = false;
  bool normalize = false;
};

struct PredictArgs {
  std::string data, model_path, matrix_path, out;
  bool multilabel = false;
  std::int64_t sparsity = 0;
  int workers = 0;
};

struct EvalArgs {
  std::string data, model_path, matrix_path, out;
  bool multilabel = false;
  std::int64_t sparsity = 0;
  int workers = 0;
};

struct VerifyArgs {
  std::string campaign = "multiclass";
  std::int64_t trials = -1, support = -1, classes = -1, embed_dim = -1;
  std::int64_t sparsity = 2, draws = 10000, retry_seeds = -1;
  double epsilon = -1, perturb = -1, min_gap = 0.3;
  int grid = 64, shrink_steps = 5, workers = 0;
  std::string kind = "rademacher";
  std::uint64_t seed = 1;
  std::string json_path, csv_path;
};

struct BenchArgs {
  std::int64_t classes = 256, features = 2000, per_class = 50, embed_dim = 64;
  double noise = 0.1, test_fraction = 0.2;
  double l1 = 0, l2 = 0;
  int iters = 50;
  double tol = 1e-5;
  std::string kind = "rademacher";
  std::uint64_t seed = 1;
  std::vector<int> workers = {1, 2, 4, 8};
  std::string out;
};

struct SynthArgs {
  std::int64_t classes = 16, features = 100, per_class = 20;
  double noise = 0.1;
  std::uint64_t seed = 1;
  double split_fraction = 0;
  std::string out, test_out;
};

struct StatsArgs {
  std::string data;
  bool multilabel = false;
  int workers = 0;
};

jle::MatrixKind parse_kind(const std::string& s) { return jle::kind_from_name(s); }

void check_artifacts_match(const jle::LinearModel& model, const jle::EmbeddingMatrix& m) {
  if (model.num_outputs != m.embed_dim)
    throw jle::DimensionError("model has " + std::to_string(model.num_outputs) +
                              " outputs but the matrix embeds into dimension " +
                              std::to_string(m.embed_dim));
}

// Exact decoding when the candidate space fits the budget, greedy otherwise.
std::vector<jle::MultilabelDecodeResult> decode_rows_multilabel(
    const std::vector<double>& P, std::int64_t rows, const jle::EmbeddingMatrix& m,
    std::int64_t sparsity) {
  std::vector<jle::MultilabelDecodeResult> out(static_cast<std::size_t>(rows));
  try {
    const jle::ExactMultilabelDecoder dec(m, sparsity);
    for (std::int64_t i = 0; i < rows; ++i)
      out[i] = dec.decode({P.data() + i * m.embed_dim, static_cast<std::size_t>(m.embed_dim)});
  } catch (const jle::BudgetError&) {
    for (std::int64_t i = 0; i < rows; ++i)
      out[i] = jle::decode_multilabel_greedy(
          {P.data() + i * m.embed_dim, static_cast<std::size_t>(m.embed_dim)}, m, sparsity);
  }
  return out;
}

std::int64_t resolve_embed_dim(const TrainArgs& a, std::int64_t num_classes) {
  if (a.embed_dim > 0 && a.epsilon > 0)
    throw jle::DomainError("give either --embed-dim or the --epsilon rule, not both");
  if (a.embed_dim > 0) return a.embed_dim;
  if (a.epsilon > 0) return jle::suggest_embed_dim(num_classes, a.epsilon, a.delta, a.c0);
  throw jle::DomainError("choose the embedding dimension with --embed-dim or --epsilon");
}

int cmd_train(const TrainArgs& a) {
  const auto start = Clock::now();
  jle::TrainConfig cfg;
  cfg.lambda1 = a.l1;
  cfg.lambda2 = a.l2;
  cfg.max_sweeps = a.iters;
  cfg.tolerance = a.tol;
  cfg.workers = a.workers;
  cfg.fit_bias = a.bias;
  cfg.normalize_features = a.normalize;

  std::int64_t rows = 0, D = 0, C = 0, n = 0;
  jle::LinearModel model;
  jle::EmbeddingMatrix matrix;
  double risk = 0;

  if (a.multilabel) {
    auto data = std::make_shared<const jle::MultilabelDataset>(
        jle::load_svmlight_multilabel(a.data, a.workers));
    if (data->num_classes < 1)
      throw jle::DomainError("training file has no labels, cannot size the embedding");
    rows = data->rows();
    D = data->num_features;
    C = data->num_classes;
    n = resolve_embed_dim(a, C);
    matrix = jle::sample_matrix(C, n, parse_kind(a.kind), a.seed, a.workers);
    const jle::RegressionDataset reg = jle::embed_dataset(data, matrix);
    model = jle::train(reg, cfg);
    risk = jle::surrogate_risk(model, reg, a.workers);
  } else {
    auto data =
        std::make_shared<const jle::SparseDataset>(jle::load_svmlight(a.data, a.workers));
    if (data->num_classes < 1)
      throw jle::DomainError("training file has no labels, cannot size the embedding");
    rows = data->rows();
    D = data->num_features;
    C = data->num_classes;
    n = resolve_embed_dim(a, C);
    matrix = jle::sample_matrix(C, n, parse_kind(a.kind), a.seed, a.workers);
    const jle::RegressionDataset reg = jle::embed_dataset(data, matrix);
    model = jle::train(reg, cfg);
    risk = jle::surrogate_risk(model, reg, a.workers);
  }

  jle::save_matrix(matrix, a.matrix_path);
  jle::save_model(model, a.model_path);

  std::cout << "rows " << rows << "\nfeatures " << D << "\nclasses " << C << "\nembed_dim "
            << n << "\nsurrogate_risk " << num(risk) << "\ntrain_seconds "
            << num(seconds_since(start)) << "\n";
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  const jle::LinearModel model = jle::load_model(a.model_path);
  const jle::EmbeddingMatrix matrix = jle::load_matrix(a.matrix_path);
  check_artifacts_match(model, matrix);

  std::string out;
  if (a.multilabel) {
    auto data = std::make_shared<const jle::MultilabelDataset>(
        jle::load_svmlight_multilabel(a.data, a.workers));
    std::int64_t sparsity = a.sparsity > 0 ? a.sparsity : data->sparsity;
    if (sparsity < 1)
      throw jle::DomainError("the query file carries no labels, give --sparsity");
    const std::vector<double> P =
        jle::predict_all(model, jle::features_of(data), a.workers);
    const auto decoded = decode_rows_multilabel(P, data->rows(), matrix, sparsity);
    for (const auto& r : decoded) {
      for (std::size_t k = 0; k < r.labels.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(r.labels[k] + 1);
      }
      out += '\n';
    }
  } else {
    auto data =
        std::make_shared<const jle::SparseDataset>(jle::load_svmlight(a.data, a.workers));
    const std::vector<double> P =
        jle::predict_all(model, jle::features_of(data), a.workers);
    const auto decoded = jle::decode_batch(P, data->rows(), matrix, a.workers);
    for (const auto& r : decoded) {
      out += std::to_string(r.label + 1);
      out += '\t';
      out += num(r.distance_sq);
      out += '\n';
    }
  }

  if (a.out.empty())
    std::cout << out;
  else
    jle::atomic_write_file(a.out, out);
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const auto start = Clock::now();
  const jle::LinearModel model = jle::load_model(a.model_path);
  const jle::EmbeddingMatrix matrix = jle::load_matrix(a.matrix_path);
  check_artifacts_match(model, matrix);

  nlohmann::json metrics;
  if (a.multilabel) {
    auto data = std::make_shared<const jle::MultilabelDataset>(
        jle::load_svmlight_multilabel(a.data, a.workers));
    if (data->rows() == 0) {
      std::cerr << "error: empty test set\n";
      return 2;
    }
    if (data->num_classes > matrix.num_classes)
      throw jle::LabelRangeError("test labels reach " + std::to_string(data->num_classes) +
                                 " but the matrix covers " +
                                 std::to_string(matrix.num_classes) + " classes");
    const std::int64_t sparsity = a.sparsity > 0 ? a.sparsity : data->sparsity;
    const std::vector<double> P =
        jle::predict_all(model, jle::features_of(data), a.workers);
    const auto decoded = decode_rows_multilabel(P, data->rows(), matrix, sparsity);

    double exact = 0, ham = 0;
    for (std::int64_t i = 0; i < data->rows(); ++i) {
      const auto truth = data->row_labels(i);
      const auto& pred = decoded[i].labels;
      exact += std::equal(pred.begin(), pred.end(), truth.begin(), truth.end()) ? 1.0 : 0.0;
      ham += jle::hamming_loss(pred, truth, matrix.num_classes);
    }
    exact /= static_cast<double>(data->rows());
    ham /= static_cast<double>(data->rows());
    std::cout << "rows " << data->rows() << "\nexact_match " << num(exact)
              << "\nmean_hamming " << num(ham) << "\neval_seconds "
              << num(seconds_since(start)) << "\n";
    metrics = {{"rows", data->rows()},
               {"classes", matrix.num_classes},
               {"embed_dim", matrix.embed_dim},
               {"exact_match", exact},
               {"mean_hamming", ham}};
  } else {
    auto data =
        std::make_shared<const jle::SparseDataset>(jle::load_svmlight(a.data, a.workers));
    if (data->rows() == 0) {
      std::cerr << "error: empty test set\n";
      return 2;
    }
    if (data->num_classes > matrix.num_classes)
      throw jle::LabelRangeError("test labels reach " + std::to_string(data->num_classes) +
                                 " but the matrix covers " +
                                 std::to_string(matrix.num_classes) + " classes");
    const std::vector<double> P =
        jle::predict_all(model, jle::features_of(data), a.workers);
    const auto decoded = jle::decode_batch(P, data->rows(), matrix, a.workers);

    std::vector<std::int32_t> pred(static_cast<std::size_t>(data->rows()));
    double mean_distance = 0;
    for (std::int64_t i = 0; i < data->rows(); ++i) {
      pred[i] = static_cast<std::int32_t>(decoded[i].label);
      mean_distance += std::sqrt(std::max(0.0, decoded[i].distance_sq));
    }
    mean_distance /= static_cast<double>(data->rows());
    const double acc = jle::evaluate_accuracy(pred, data->labels);
    std::cout << "rows " << data->rows() << "\naccuracy " << num(acc) << "\nmean_distance "
              << num(mean_distance) << "\neval_seconds " << num(seconds_since(start)) << "\n";
    metrics = {{"rows", data->rows()},
               {"classes", matrix.num_classes},
               {"embed_dim", matrix.embed_dim},
               {"accuracy", acc},
               {"mean_distance", mean_distance}};
  }

  if (!a.out.empty()) jle::atomic_write_file(a.out, metrics.dump(2) + "\n");
  return 0;
}

void fill_default(std::int64_t& v, std::int64_t def) {
  if (v < 0) v = def;
}
void fill_default(double& v, double def) {
  if (v < 0) v = def;
}

int cmd_verify(const VerifyArgs& a) {
  const jle::MatrixKind kind = parse_kind(a.kind);
  std::int64_t violations = 0;
  std::vector<std::uint64_t> violating_seeds;
  std::string json_doc, csv_doc;
  std::ostringstream summary;

  VerifyArgs v = a;
  if (a.campaign == "multiclass") {
    fill_default(v.trials, 100);
    fill_default(v.support, 20);
    fill_default(v.classes, 32);
    fill_default(v.embed_dim, 8192);
    fill_default(v.epsilon, 0.2);
    fill_default(v.perturb, 0.2);
    fill_default(v.retry_seeds, 0);
    jle::MulticlassCampaignParams p;
    p.trials = v.trials;
    p.support = v.support;
    p.classes = v.classes;
    p.embed_dim = v.embed_dim;
    p.kind = kind;
    p.epsilon = v.epsilon;
    p.perturb = v.perturb;
    p.grid = v.grid;
    p.seed = v.seed;
    p.retry_seeds = v.retry_seeds;
    p.workers = v.workers;
    const jle::CampaignReport rep = jle::run_multiclass_campaign(p);
    violations = rep.violations;
    for (const auto& rec : rep.records)
      if (!rec.skipped_jlp && !rec.report.holds) violating_seeds.push_back(rec.seed);
    summary << "campaign multiclass\ntrials " << rep.trials << "\nasserted " << rep.asserted
            << "\nskipped " << rep.skipped << "\nviolations " << rep.violations << "\n";
    json_doc = jle::campaign_json(rep);
    csv_doc = jle::campaign_csv(rep);
  } else if (a.campaign == "massart") {
    fill_default(v.trials, 50);
    fill_default(v.support, 10);
    fill_default(v.classes, 8);
    fill_default(v.embed_dim, 32768);
    fill_default(v.epsilon, 0.1);
    fill_default(v.perturb, 1.0);
    fill_default(v.retry_seeds, 0);
    jle::MassartCampaignParams p;
    p.trials = v.trials;
    p.support = v.support;
    p.classes = v.classes;
    p.embed_dim = v.embed_dim;
    p.kind = kind;
    p.epsilon = v.epsilon;
    p.min_gap = v.min_gap;
    p.perturb = v.perturb;
    p.shrink_steps = v.shrink_steps;
    p.seed = v.seed;
    p.retry_seeds = v.retry_seeds;
    p.workers = v.workers;
    const jle::MassartCampaignReport rep = jle::run_massart_campaign(p);
    violations = rep.violations;
    for (const auto& rec : rep.records)
      if (!rec.skipped_jlp &&
          (!rec.bound_held || !rec.implication_held || !rec.optimum_exact_zero))
        violating_seeds.push_back(rec.seed);
    summary << "campaign massart\ntrials " << rep.trials << "\nasserted " << rep.asserted
            << "\nskipped " << rep.skipped << "\nviolations " << rep.violations << "\n";
    json_doc = jle::massart_campaign_json(rep);
    csv_doc = jle::massart_campaign_csv(rep);
  } else if (a.campaign == "multilabel") {
    fill_default(v.trials, 50);
    fill_default(v.support, 6);
    fill_default(v.classes, 6);
    fill_default(v.embed_dim, 4096);
    fill_default(v.epsilon, 0.5);
    fill_default(v.perturb, 0.2);
    fill_default(v.retry_seeds, 0);
    jle::MultilabelCampaignParams p;
    p.trials = v.trials;
    p.support = v.support;
    p.classes = v.classes;
    p.sparsity = v.sparsity;
    p.embed_dim = v.embed_dim;
    p.kind = kind;
    p.epsilon = v.epsilon;
    p.perturb = v.perturb;
    p.grid = v.grid;
    p.seed = v.seed;
    p.retry_seeds = v.retry_seeds;
    p.workers = v.workers;
    const jle::CampaignReport rep = jle::run_multilabel_campaign(p);
    violations = rep.violations;
    for (const auto& rec : rep.records)
      if (!rec.skipped_jlp && !rec.report.holds) violating_seeds.push_back(rec.seed);
    summary << "campaign multilabel\ntrials " << rep.trials << "\nasserted " << rep.asserted
            << "\nskipped " << rep.skipped << "\nviolations " << rep.violations << "\n";
    json_doc = jle::campaign_json(rep);
    csv_doc = jle::campaign_csv(rep);
  } else if (a.campaign == "lemmas") {
    fill_default(v.support, 10);
    fill_default(v.classes, 16);
    fill_default(v.embed_dim, 2048);
    fill_default(v.epsilon, 0.4);
    fill_default(v.retry_seeds, 8);
    jle::LemmaCampaignParams p;
    p.draws = v.draws;
    p.support = v.support;
    p.classes = v.classes;
    p.embed_dim = v.embed_dim;
    p.kind = kind;
    p.epsilon = v.epsilon;
    p.seed = v.seed;
    p.retry_seeds = v.retry_seeds;
    const jle::LemmaCampaignReport rep = jle::run_lemma_campaign(p);
    violations = rep.violations;
    const auto line = [&](const char* name, const jle::OracleCounts& c) {
      summary << name << " draws " << c.draws << " premise_hits " << c.premise_hits
              << " violations " << c.violations << "\n";
    };
    summary << "campaign lemmas\nepsilon_observed " << num(rep.epsilon_observed) << "\n";
    line("norm_sandwich", rep.lemmas.norm_sandwich);
    line("order_preservation", rep.lemmas.order_preservation);
    line("risk_transfer", rep.lemmas.risk_transfer);
    line("sublevel_radius", rep.lemmas.sublevel_radius);
    summary << "violations " << rep.violations << "\n";
    json_doc = jle::lemma_campaign_json(rep);
  } else {
    throw jle::DomainError("unknown campaign " + a.campaign);
  }

  if (!a.json_path.empty()) jle::atomic_write_file(a.json_path, json_doc);
  if (!a.csv_path.empty() && !csv_doc.empty()) jle::atomic_write_file(a.csv_path, csv_doc);
  std::cout << summary.str();

  if (violations > 0) {
    std::cerr << "error: " << violations << " violation" << (violations == 1 ? "" : "s");
    if (!violating_seeds.empty()) {
      std::cerr << " at trial seeds";
      for (std::uint64_t s : violating_seeds) std::cerr << ' ' << s;
    }
    std::cerr << "\n";
    return 3;
  }
  return 0;
}

int cmd_bench(const BenchArgs& a) {
  const jle::SparseDataset full =
      jle::synth_blobs(a.classes, a.features, a.per_class, a.noise, a.seed);
  const jle::SplitResult parts = jle::split(full, a.test_fraction, a.seed + 1);
  auto train_data = std::make_shared<const jle::SparseDataset>(parts.train);
  auto test_data = std::make_shared<const jle::SparseDataset>(parts.test);

  const jle::EmbeddingMatrix matrix =
      jle::sample_matrix(a.classes, a.embed_dim, parse_kind(a.kind), a.seed);
  const jle::RegressionDataset reg = jle::embed_dataset(train_data, matrix);

  std::string csv = "workers,train_seconds,decode_seconds,accuracy\n";
  for (int w : a.workers) {
    jle::TrainConfig cfg;
    cfg.lambda1 = a.l1;
    cfg.lambda2 = a.l2;
    cfg.max_sweeps = a.iters;
    cfg.tolerance = a.tol;
    cfg.workers = w;

    auto t0 = Clock::now();
    const jle::LinearModel model = jle::train(reg, cfg);
    const double train_s = seconds_since(t0);

    t0 = Clock::now();
    const std::vector<double> P = jle::predict_all(model, jle::features_of(test_data), w);
    const auto decoded = jle::decode_batch(P, test_data->rows(), matrix, w);
    const double decode_s = seconds_since(t0);

    std::vector<std::int32_t> pred(decoded.size());
    for (std::size_t i = 0; i < decoded.size(); ++i)
      pred[i] = static_cast<std::int32_t>(decoded[i].label);
    const double acc = jle::evaluate_accuracy(pred, test_data->labels);

    csv += std::to_string(w) + "," + num(train_s) + "," + num(decode_s) + "," + num(acc) +
           "\n";
  }

  if (a.out.empty())
    std::cout << csv;
  else
    jle::atomic_write_file(a.out, csv);
  return 0;
}

int cmd_synth(const SynthArgs& a) {
  const jle::SparseDataset d =
      jle::synth_blobs(a.classes, a.features, a.per_class, a.noise, a.seed);
  if (a.split_fraction > 0) {
    if (a.test_out.empty())
      throw jle::DomainError("--split needs --test-out for the held-out part");
    const jle::SplitResult parts = jle::split(d, a.split_fraction, a.seed + 1);
    jle::save_svmlight(parts.train, a.out);
    jle::save_svmlight(parts.test, a.test_out);
    std::cout << "train_rows " << parts.train.rows() << "\ntest_rows " << parts.test.rows()
              << "\n";
  } else {
    jle::save_svmlight(d, a.out);
    std::cout << "rows " << d.rows() << "\n";
  }
  std::cout << "features " << d.num_features << "\nclasses " << d.num_classes << "\n";
  return 0;
}

int cmd_stats(const StatsArgs& a) {
  if (a.multilabel) {
    const jle::MultilabelDataset d = jle::load_svmlight_multilabel(a.data, a.workers);
    const double density =
        d.rows() > 0 && d.num_features > 0
            ? static_cast<double>(d.col.size()) /
                  (static_cast<double>(d.rows()) * static_cast<double>(d.num_features))
            : 0.0;
    std::cout << "rows " << d.rows() << "\nfeatures " << d.num_features << "\nclasses "
              << d.num_classes << "\nsparsity " << d.sparsity << "\nnnz " << d.col.size()
              << "\ndensity " << num(density) << "\n";
  } else {
    const jle::DatasetStats s = jle::stats(jle::load_svmlight(a.data, a.workers));
    std::cout << "rows " << s.rows << "\nfeatures " << s.num_features << "\nclasses "
              << s.num_classes << "\nnnz " << s.nnz << "\ndensity " << num(s.density)
              << "\n";
  }
  return 0;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const jle::JlpViolationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const jle::ConditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const jle::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const jle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-embedding classification pipeline"};
  app.require_subcommand(1);
  // Campaign sweeps script this tool heavily; a config file keeps those
  // invocations reviewable. Values given on the command line win.
  app.set_config("--config", "", "read defaults from an ini file (flags win)");

  const std::vector<std::string> kinds = {"gaussian", "rademacher"};

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "fit matrix + model from an svmlight file");
  train->add_option("--data", train_args.data, "training file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--model", train_args.model_path, "model output path")->required();
  train->add_option("--matrix", train_args.matrix_path, "matrix output path")->required();
  train->add_flag("--multilabel", train_args.multilabel, "comma-separated label lists");
  train->add_option("--embed-dim", train_args.embed_dim, "embedding dimension n");
  train->add_option("--epsilon", train_args.epsilon, "distortion target for the n rule");
  train->add_option("--delta", train_args.delta, "failure probability for the n rule");
  train->add_option("--c0", train_args.c0, "constant in the n rule");
  train->add_option("--kind", train_args.kind, "matrix kind")->check(CLI::IsMember(kinds));
  train->add_option("--seed", train_args.seed, "matrix seed");
  train->add_option("--l1", train_args.l1, "lasso penalty");
  train->add_option("--l2", train_args.l2, "ridge penalty");
  train->add_option("--iters", train_args.iters, "max coordinate sweeps");
  train->add_option("--tol", train_args.tol, "per-column stopping tolerance");
  train->add_option("--workers", train_args.workers, "thread count, 0 = all");
  train->add_flag("--bias", train_args.bias, "fit unpenalized intercepts");
  train->add_flag("--normalize", train_args.normalize, "per-feature l2 scaling");

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "decode labels for a query file");
  predict->add_option("--data", predict_args.data, "query file")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--model", predict_args.model_path, "model path")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--matrix", predict_args.matrix_path, "matrix path")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_flag("--multilabel", predict_args.multilabel, "decode label sets");
  predict->add_option("--sparsity", predict_args.sparsity, "max active labels per set");
  predict->add_option("--out", predict_args.out, "write predictions here, stdout if absent");
  predict->add_option("--workers", predict_args.workers, "thread count, 0 = all");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "accuracy of a model on a labeled file");
  eval->add_option("--data", eval_args.data, "test file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--model", eval_args.model_path, "model path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--matrix", eval_args.matrix_path, "matrix path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_flag("--multilabel", eval_args.multilabel, "evaluate label sets");
  eval->add_option("--sparsity", eval_args.sparsity, "max active labels per set");
  eval->add_option("--out", eval_args.out, "JSON metrics path");
  eval->add_option("--workers", eval_args.workers, "thread count, 0 = all");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "run a bound-verification campaign");
  verify->add_option("--campaign", verify_args.campaign, "which campaign")
      ->check(CLI::IsMember({"multiclass", "massart", "multilabel", "lemmas"}));
  verify->add_option("--trials", verify_args.trials, "trial count");
  verify->add_option("--support", verify_args.support, "support points per distribution");
  verify->add_option("--classes", verify_args.classes, "class count C");
  verify->add_option("--embed-dim", verify_args.embed_dim, "embedding dimension n");
  verify->add_option("--sparsity", verify_args.sparsity, "multilabel K");
  verify->add_option("--epsilon", verify_args.epsilon, "distortion parameter");
  verify->add_option("--perturb", verify_args.perturb, "f perturbation scale");
  verify->add_option("--min-gap", verify_args.min_gap, "massart margin floor");
  verify->add_option("--shrink-steps", verify_args.shrink_steps, "massart shrink steps");
  verify->add_option("--grid", verify_args.grid, "r grid size");
  verify->add_option("--draws", verify_args.draws, "lemma oracle draws");
  verify->add_option("--kind", verify_args.kind, "matrix kind")->check(CLI::IsMember(kinds));
  verify->add_option("--seed", verify_args.seed, "campaign seed");
  verify->add_option("--retry-seeds", verify_args.retry_seeds,
                     "matrix redraws before skipping a trial");
  verify->add_option("--json", verify_args.json_path, "JSON report path");
  verify->add_option("--csv", verify_args.csv_path, "CSV report path");
  verify->add_option("--workers", verify_args.workers, "thread count, 0 = all");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "time train/decode across worker counts");
  bench->add_option("--classes", bench_args.classes, "class count");
  bench->add_option("--features", bench_args.features, "feature dimension");
  bench->add_option("--per-class", bench_args.per_class, "examples per class");
  bench->add_option("--noise", bench_args.noise, "blob noise scale");
  bench->add_option("--embed-dim", bench_args.embed_dim, "embedding dimension");
  bench->add_option("--test-fraction", bench_args.test_fraction, "held-out fraction");
  bench->add_option("--l1", bench_args.l1, "lasso penalty");
  bench->add_option("--l2", bench_args.l2, "ridge penalty");
  bench->add_option("--iters", bench_args.iters, "max coordinate sweeps");
  bench->add_option("--tol", bench_args.tol, "stopping tolerance");
  bench->add_option("--kind", bench_args.kind, "matrix kind")->check(CLI::IsMember(kinds));
  bench->add_option("--seed", bench_args.seed, "seed");
  bench->add_option("--workers", bench_args.workers, "worker counts, one row each");
  bench->add_option("--out", bench_args.out, "CSV path, stdout if absent");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic blob dataset");
  synth->add_option("--classes", synth_args.classes, "class count");
  synth->add_option("--features", synth_args.features, "feature dimension");
  synth->add_option("--per-class", synth_args.per_class, "examples per class");
  synth->add_option("--noise", synth_args.noise, "noise scale");
  synth->add_option("--seed", synth_args.seed, "seed");
  synth->add_option("--split", synth_args.split_fraction, "held-out fraction");
  synth->add_option("--out", synth_args.out, "output file")->required();
  synth->add_option("--test-out", synth_args.test_out, "held-out output file");

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "print dataset shape and density");
  stats->add_option("--data", stats_args.data, "svmlight file")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_flag("--multilabel", stats_args.multilabel, "comma-separated label lists");
  stats->add_option("--workers", stats_args.workers, "thread count, 0 = all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (train->parsed()) return guarded([&] { return cmd_train(train_args); });
  if (predict->parsed()) return guarded([&] { return cmd_predict(predict_args); });
  if (eval->parsed()) return guarded([&] { return cmd_eval(eval_args); });
  if (verify->parsed()) return guarded([&] { return cmd_verify(verify_args); });
  if (bench->parsed()) return guarded([&] { return cmd_bench(bench_args); });
  if (synth->parsed()) return guarded([&] { return cmd_synth(synth_args); });
  if (stats->parsed()) return guarded([&] { return cmd_stats(stats_args); });
  return 1;
}
