#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jle/risklab.hpp"

namespace jle {

// Verification campaigns: many independent trials of (distribution, matrix,
// prediction table) with the bound asserted on each. A trial whose matrix
// fails its certificate is marked skipped (the bound is vacuous there); with
// retry_seeds > 0 the campaign redraws the matrix seed up to that many times
// first. Trials are embarrassingly parallel.

struct TrialRecord {
  std::uint64_t seed = 0;
  bool skipped_jlp = false;
  double epsilon_observed = 0;
  std::int64_t matrix_seed_retries = 0;
  ExcessRiskReport report;  // valid when not skipped
};

struct CampaignReport {
  std::string campaign;
  std::int64_t trials = 0;
  std::int64_t asserted = 0;
  std::int64_t skipped = 0;
  std::int64_t violations = 0;
  std::vector<TrialRecord> records;
  std::vector<std::pair<std::string, double>> params;  // echoed into reports
};

struct MulticlassCampaignParams {
  std::int64_t trials = 100;
  std::int64_t support = 20;   // M
  std::int64_t classes = 32;   // C
  std::int64_t embed_dim = 8192;
  MatrixKind kind = MatrixKind::rademacher;
  double epsilon = 0.2;
  double perturb = 0.2;  // scale of the f = bayes + noise perturbation
  int grid = 64;
  std::uint64_t seed = 1;
  std::int64_t retry_seeds = 0;
  int workers = 0;
};

CampaignReport run_multiclass_campaign(const MulticlassCampaignParams& p);

struct MassartCampaignParams {
  std::int64_t trials = 50;
  std::int64_t support = 10;
  std::int64_t classes = 8;
  std::int64_t embed_dim = 32768;
  MatrixKind kind = MatrixKind::rademacher;
  double epsilon = 0.1;
  double min_gap = 0.3;
  double perturb = 1.0;  // initial offset scale; shrunk by sqrt(10) steps
  int shrink_steps = 5;  // excess_sq factors 10^0 .. 10^-(steps-1)
  std::uint64_t seed = 1;
  std::int64_t retry_seeds = 0;
  int workers = 0;
};

// Per trial: asserts the low-noise bound at every shrink step, that the
// exact optimum f = G eta has zero 0-1 excess, and that the per-point
// transfer implication holds: once every support point satisfies
// 1/2 |f_i - G eta_i|^2 < (g - epsilon)^2 / (16 + 8 epsilon), the 0-1
// excess is exactly 0.
struct MassartTrialRecord {
  std::uint64_t seed = 0;
  bool skipped_jlp = false;
  double epsilon_observed = 0;
  bool optimum_exact_zero = false;
  bool implication_held = true;
  bool bound_held = true;
  std::int64_t steps_below_threshold = 0;  // shrink steps with the premise true everywhere
};

struct MassartCampaignReport {
  std::int64_t trials = 0, asserted = 0, skipped = 0, violations = 0;
  std::vector<MassartTrialRecord> records;
};

MassartCampaignReport run_massart_campaign(const MassartCampaignParams& p);

struct MultilabelCampaignParams {
  std::int64_t trials = 50;
  std::int64_t support = 6;
  std::int64_t classes = 6;
  std::int64_t sparsity = 2;  // K
  std::int64_t embed_dim = 4096;
  MatrixKind kind = MatrixKind::rademacher;
  double epsilon = 0.5;
  double perturb = 0.2;
  int grid = 64;
  std::uint64_t seed = 1;
  std::int64_t retry_seeds = 0;
  int workers = 0;
};

CampaignReport run_multilabel_campaign(const MultilabelCampaignParams& p);

struct LemmaCampaignParams {
  std::int64_t draws = 10000;
  std::int64_t support = 10;
  std::int64_t classes = 16;
  std::int64_t embed_dim = 2048;
  MatrixKind kind = MatrixKind::rademacher;
  double epsilon = 0.4;
  std::uint64_t seed = 1;
  std::int64_t retry_seeds = 8;
};

struct LemmaCampaignReport {
  LemmaReport lemmas;
  double epsilon_observed = 0;
  std::int64_t violations = 0;
};

LemmaCampaignReport run_lemma_campaign(const LemmaCampaignParams& p);

// Report serialization for the verify subcommand: one JSON document, or CSV
// with one row per trial.
std::string campaign_json(const CampaignReport& r);
std::string campaign_csv(const CampaignReport& r);
std::string massart_campaign_json(const MassartCampaignReport& r);
std::string massart_campaign_csv(const MassartCampaignReport& r);
std::string lemma_campaign_json(const LemmaCampaignReport& r);

}  // namespace jle
