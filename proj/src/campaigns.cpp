#include "jle/campaigns.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "jle/errors.hpp"
#include "jle/rng.hpp"
#include "json.hpp"
#include "omp_util.hpp"

namespace jle {

namespace {

// Trial t of a campaign seeded s is a pure function of (s, t): the trial
// stream is CounterRng{s}.derive(t), the distribution seed is bits(0) of
// that stream, and matrix attempt a uses bits(1 + a). Campaign output is
// therefore identical for any worker count.
constexpr std::uint64_t kDistCounter = 0;
constexpr std::uint64_t kMatrixCounterBase = 1;

// f = optimum + radius * unit direction, one radius and one direction per
// support point. Directions live on their own derived stream so the
// gaussian counters (point i, coordinate j) -> i*n + j never collide with
// the scalar radius draws.
std::vector<double> perturbed_table(const std::vector<double>& optimum, std::int64_t M,
                                    std::int64_t n, const CounterRng& trial, double scale) {
  std::vector<double> f = optimum;
  if (scale <= 0) return f;
  const CounterRng dirs = trial.derive(2);
  const CounterRng radii = trial.derive(3);
  std::vector<double> dir(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < M; ++i) {
    double sq = 0;
    for (std::int64_t j = 0; j < n; ++j) {
      dir[j] = dirs.gaussian(static_cast<std::uint64_t>(i * n + j));
      sq += dir[j] * dir[j];
    }
    if (sq == 0) continue;
    const double radius = scale * radii.uniform(static_cast<std::uint64_t>(i));
    const double mul = radius / std::sqrt(sq);
    double* row = f.data() + i * n;
    for (std::int64_t j = 0; j < n; ++j) row[j] += mul * dir[j];
  }
  return f;
}

void check_common(std::int64_t trials, std::int64_t support, std::int64_t classes,
                  std::int64_t embed_dim, double epsilon, double perturb,
                  std::int64_t retry_seeds) {
  if (trials < 1) throw DomainError("campaign: trials must be at least 1");
  if (support < 1) throw DomainError("campaign: support must be at least 1");
  if (classes < 2) throw DomainError("campaign: classes must be at least 2");
  if (embed_dim < 1) throw DomainError("campaign: embed_dim must be at least 1");
  if (!(epsilon > 0) || !(epsilon < 1))
    throw DomainError("campaign: epsilon must lie in (0, 1)");
  if (!(perturb >= 0) || !std::isfinite(perturb))
    throw DomainError("campaign: perturb must be finite and nonnegative");
  if (retry_seeds < 0) throw DomainError("campaign: retry_seeds must be nonnegative");
}

// A trial body may only throw on a genuine internal defect (the certificate
// is re-checked before each bound). Exceptions cannot cross an omp region,
// so they are captured per trial and the first one rethrown serially.
void rethrow_first(const std::vector<std::string>& errors) {
  for (std::size_t t = 0; t < errors.size(); ++t)
    if (!errors[t].empty())
      throw Error("trial " + std::to_string(t) + ": " + errors[t]);
}

void put_num(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

nlohmann::json report_json(const ExcessRiskReport& r) {
  return {{"excess_loss", r.excess_loss}, {"excess_sq", r.excess_sq},
          {"r", r.r},                     {"term1", r.term1},
          {"term2", r.term2},             {"term3", r.term3},
          {"rhs", r.rhs},                 {"holds", r.holds}};
}

}  // namespace

CampaignReport run_multiclass_campaign(const MulticlassCampaignParams& p) {
  check_common(p.trials, p.support, p.classes, p.embed_dim, p.epsilon, p.perturb,
               p.retry_seeds);
  if (p.grid < 1) throw DomainError("campaign: grid must be at least 1");

  const std::vector<double> grid = geometric_grid(p.epsilon, 1.0, p.grid);
  const double eps_cert = p.epsilon / 4;
  const CounterRng root{p.seed};

  CampaignReport out;
  out.campaign = "multiclass";
  out.trials = p.trials;
  out.records.resize(static_cast<std::size_t>(p.trials));
  out.params = {{"trials", static_cast<double>(p.trials)},
                {"support", static_cast<double>(p.support)},
                {"classes", static_cast<double>(p.classes)},
                {"embed_dim", static_cast<double>(p.embed_dim)},
                {"kind", static_cast<double>(static_cast<std::uint8_t>(p.kind))},
                {"epsilon", p.epsilon},
                {"perturb", p.perturb},
                {"grid", static_cast<double>(p.grid)},
                {"seed", static_cast<double>(p.seed)},
                {"retry_seeds", static_cast<double>(p.retry_seeds)}};

  std::vector<std::string> errors(static_cast<std::size_t>(p.trials));
  const int nt = effective_workers(p.workers);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::int64_t t = 0; t < p.trials; ++t) {
    TrialRecord& rec = out.records[static_cast<std::size_t>(t)];
    try {
      const CounterRng trial = root.derive(static_cast<std::uint64_t>(t));
      rec.seed = trial.seed;
      const SyntheticDistribution dist =
          random_distribution(p.support, p.classes, trial.bits(kDistCounter));

      EmbeddingMatrix m;
      JlpReport cert;
      for (std::int64_t a = 0; a <= p.retry_seeds; ++a) {
        m = sample_matrix(p.classes, p.embed_dim, p.kind,
                          trial.bits(kMatrixCounterBase + static_cast<std::uint64_t>(a)), 1);
        cert = verify_jlp(m, eps_cert, 1);
        rec.matrix_seed_retries = a;
        if (cert.passed) break;
      }
      rec.epsilon_observed = cert.epsilon_observed;
      if (!cert.passed) {
        rec.skipped_jlp = true;
        continue;
      }

      const std::vector<double> bayes = bayes_optimal_table(dist, m);
      const std::vector<double> f =
          perturbed_table(bayes, dist.num_points, m.embed_dim, trial, p.perturb);
      rec.report = multiclass_excess_bound(dist, m, f, p.epsilon, grid);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(t)] = e.what();
    }
  }
  rethrow_first(errors);

  for (const TrialRecord& rec : out.records) {
    if (rec.skipped_jlp)
      ++out.skipped;
    else {
      ++out.asserted;
      if (!rec.report.holds) ++out.violations;
    }
  }
  return out;
}

MassartCampaignReport run_massart_campaign(const MassartCampaignParams& p) {
  check_common(p.trials, p.support, p.classes, p.embed_dim, p.epsilon, p.perturb,
               p.retry_seeds);
  if (!(p.min_gap > p.epsilon) || !(p.min_gap <= 1))
    throw DomainError("campaign: min_gap must lie in (epsilon, 1]");
  if (p.shrink_steps < 1) throw DomainError("campaign: shrink_steps must be at least 1");

  const double eps_cert = p.epsilon / 4;
  const CounterRng root{p.seed};

  MassartCampaignReport out;
  out.trials = p.trials;
  out.records.resize(static_cast<std::size_t>(p.trials));

  std::vector<std::string> errors(static_cast<std::size_t>(p.trials));
  const int nt = effective_workers(p.workers);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::int64_t t = 0; t < p.trials; ++t) {
    MassartTrialRecord& rec = out.records[static_cast<std::size_t>(t)];
    try {
      const CounterRng trial = root.derive(static_cast<std::uint64_t>(t));
      rec.seed = trial.seed;
      const SyntheticDistribution dist =
          massart_distribution(p.support, p.classes, p.min_gap, trial.bits(kDistCounter));

      EmbeddingMatrix m;
      JlpReport cert;
      for (std::int64_t a = 0; a <= p.retry_seeds; ++a) {
        m = sample_matrix(p.classes, p.embed_dim, p.kind,
                          trial.bits(kMatrixCounterBase + static_cast<std::uint64_t>(a)), 1);
        cert = verify_jlp(m, eps_cert, 1);
        if (cert.passed) break;
      }
      rec.epsilon_observed = cert.epsilon_observed;
      if (!cert.passed) {
        rec.skipped_jlp = true;
        continue;
      }

      const std::int64_t M = dist.num_points;
      const std::int64_t n = m.embed_dim;
      const std::vector<double> bayes = bayes_optimal_table(dist, m);
      rec.optimum_exact_zero = excess_01_risk(bayes, dist, m) == 0.0;

      // Premise of the low-noise transfer at each point: the conditional
      // squared excess 1/2 |f_i - G eta_i|^2 sits below the threshold built
      // from the worst margin g.
      const double g = min_noise_margin(dist);
      const double threshold =
          (g - p.epsilon) * (g - p.epsilon) / (16.0 + 8.0 * p.epsilon);

      for (int s = 0; s < p.shrink_steps; ++s) {
        // Step s shrinks the offset by 10^(-s/2), so excess_sq drops by
        // one decade per step.
        const double scale = p.perturb * std::pow(10.0, -0.5 * s);
        const std::vector<double> f = perturbed_table(bayes, M, n, trial, scale);

        const ExcessRiskReport rep = massart_excess_bound(dist, m, f, p.epsilon);
        if (!rep.holds) rec.bound_held = false;

        bool premise_all = true;
        for (std::int64_t i = 0; i < M && premise_all; ++i) {
          double sq = 0;
          const double* fi = f.data() + i * n;
          const double* bi = bayes.data() + i * n;
          for (std::int64_t j = 0; j < n; ++j) {
            const double d = fi[j] - bi[j];
            sq += d * d;
          }
          if (!(0.5 * sq < threshold)) premise_all = false;
        }
        if (premise_all) {
          ++rec.steps_below_threshold;
          if (excess_01_risk(f, dist, m) != 0.0) rec.implication_held = false;
        }
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(t)] = e.what();
    }
  }
  rethrow_first(errors);

  for (const MassartTrialRecord& rec : out.records) {
    if (rec.skipped_jlp)
      ++out.skipped;
    else {
      ++out.asserted;
      if (!rec.bound_held || !rec.implication_held || !rec.optimum_exact_zero)
        ++out.violations;
    }
  }
  return out;
}

CampaignReport run_multilabel_campaign(const MultilabelCampaignParams& p) {
  check_common(p.trials, p.support, p.classes, p.embed_dim, p.epsilon, p.perturb,
               p.retry_seeds);
  if (p.sparsity < 1 || p.sparsity > p.classes)
    throw DomainError("campaign: sparsity must lie in [1, classes]");
  if (p.grid < 1) throw DomainError("campaign: grid must be at least 1");

  const double r_floor =
      p.epsilon * static_cast<double>(p.sparsity) / static_cast<double>(p.classes);
  const std::vector<double> grid = geometric_grid(r_floor, 1.0, p.grid);
  const double eps_family = p.epsilon / (2.0 + 2.0 * std::sqrt(2.0));
  const CounterRng root{p.seed};

  CampaignReport out;
  out.campaign = "multilabel";
  out.trials = p.trials;
  out.records.resize(static_cast<std::size_t>(p.trials));
  out.params = {{"trials", static_cast<double>(p.trials)},
                {"support", static_cast<double>(p.support)},
                {"classes", static_cast<double>(p.classes)},
                {"sparsity", static_cast<double>(p.sparsity)},
                {"embed_dim", static_cast<double>(p.embed_dim)},
                {"kind", static_cast<double>(static_cast<std::uint8_t>(p.kind))},
                {"epsilon", p.epsilon},
                {"perturb", p.perturb},
                {"grid", static_cast<double>(p.grid)},
                {"seed", static_cast<double>(p.seed)},
                {"retry_seeds", static_cast<double>(p.retry_seeds)}};

  std::vector<std::string> errors(static_cast<std::size_t>(p.trials));
  const int nt = effective_workers(p.workers);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::int64_t t = 0; t < p.trials; ++t) {
    TrialRecord& rec = out.records[static_cast<std::size_t>(t)];
    try {
      const CounterRng trial = root.derive(static_cast<std::uint64_t>(t));
      rec.seed = trial.seed;
      const MultilabelSyntheticDistribution dist = random_multilabel_distribution(
          p.support, p.classes, p.sparsity, trial.bits(kDistCounter));

      EmbeddingMatrix m;
      JlpReport cert;
      for (std::int64_t a = 0; a <= p.retry_seeds; ++a) {
        m = sample_matrix(p.classes, p.embed_dim, p.kind,
                          trial.bits(kMatrixCounterBase + static_cast<std::uint64_t>(a)), 1);
        cert = verify_multilabel_family(dist, m, eps_family);
        rec.matrix_seed_retries = a;
        if (cert.passed) break;
      }
      rec.epsilon_observed = cert.epsilon_observed;
      if (!cert.passed) {
        rec.skipped_jlp = true;
        continue;
      }

      const std::vector<double> bayes = multilabel_bayes_table(dist, m);
      const std::vector<double> f =
          perturbed_table(bayes, dist.num_points, m.embed_dim, trial, p.perturb);
      rec.report = multilabel_excess_bound(dist, m, f, p.epsilon, grid);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(t)] = e.what();
    }
  }
  rethrow_first(errors);

  for (const TrialRecord& rec : out.records) {
    if (rec.skipped_jlp)
      ++out.skipped;
    else {
      ++out.asserted;
      if (!rec.report.holds) ++out.violations;
    }
  }
  return out;
}

LemmaCampaignReport run_lemma_campaign(const LemmaCampaignParams& p) {
  check_common(1, p.support, p.classes, p.embed_dim, p.epsilon, 0, p.retry_seeds);
  if (p.draws < 1) throw DomainError("campaign: draws must be at least 1");

  const double eps_cert = p.epsilon / 4;
  const CounterRng root{p.seed};
  const SyntheticDistribution dist =
      random_distribution(p.support, p.classes, root.bits(kDistCounter));

  // The lemma oracles are meaningless on an uncertified matrix, so a seed
  // that fails the certificate is an error here, not a skip.
  EmbeddingMatrix m;
  JlpReport cert;
  for (std::int64_t a = 0; a <= p.retry_seeds; ++a) {
    m = sample_matrix(p.classes, p.embed_dim, p.kind,
                      root.bits(kMatrixCounterBase + static_cast<std::uint64_t>(a)));
    cert = verify_jlp(m, eps_cert);
    if (cert.passed) break;
  }
  if (!cert.passed)
    throw JlpViolationError(
        "no matrix seed out of " + std::to_string(p.retry_seeds + 1) +
        " reached distortion " + std::to_string(eps_cert) + " (last observed " +
        std::to_string(cert.epsilon_observed) + "); raise embed_dim");

  LemmaCampaignReport out;
  out.lemmas = run_lemma_checks(dist, m, p.epsilon, p.draws, root.derive(1).seed);
  out.epsilon_observed = cert.epsilon_observed;
  out.violations = out.lemmas.norm_sandwich.violations +
                   out.lemmas.order_preservation.violations +
                   out.lemmas.risk_transfer.violations +
                   out.lemmas.sublevel_radius.violations;
  return out;
}

std::string campaign_json(const CampaignReport& r) {
  nlohmann::json j;
  j["campaign"] = r.campaign;
  j["trials"] = r.trials;
  j["asserted"] = r.asserted;
  j["skipped"] = r.skipped;
  j["violations"] = r.violations;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  j["params"] = params;
  nlohmann::json records = nlohmann::json::array();
  for (const TrialRecord& rec : r.records) {
    nlohmann::json jr = {{"seed", rec.seed},
                         {"skipped_jlp", rec.skipped_jlp},
                         {"epsilon_observed", rec.epsilon_observed},
                         {"matrix_seed_retries", rec.matrix_seed_retries}};
    jr["report"] = rec.skipped_jlp ? nlohmann::json() : report_json(rec.report);
    records.push_back(std::move(jr));
  }
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

std::string campaign_csv(const CampaignReport& r) {
  std::string out =
      "trial,seed,skipped_jlp,epsilon_observed,matrix_seed_retries,"
      "excess_loss,excess_sq,r,term1,term2,term3,rhs,holds\n";
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    const TrialRecord& rec = r.records[t];
    out += std::to_string(t);
    out += ',';
    out += std::to_string(rec.seed);
    out += ',';
    out += rec.skipped_jlp ? '1' : '0';
    out += ',';
    put_num(out, rec.epsilon_observed);
    out += ',';
    out += std::to_string(rec.matrix_seed_retries);
    if (rec.skipped_jlp) {
      out += ",,,,,,,,\n";
      continue;
    }
    for (double v : {rec.report.excess_loss, rec.report.excess_sq, rec.report.r,
                     rec.report.term1, rec.report.term2, rec.report.term3, rec.report.rhs}) {
      out += ',';
      put_num(out, v);
    }
    out += ',';
    out += rec.report.holds ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string massart_campaign_json(const MassartCampaignReport& r) {
  nlohmann::json j;
  j["campaign"] = "massart";
  j["trials"] = r.trials;
  j["asserted"] = r.asserted;
  j["skipped"] = r.skipped;
  j["violations"] = r.violations;
  nlohmann::json records = nlohmann::json::array();
  for (const MassartTrialRecord& rec : r.records) {
    records.push_back({{"seed", rec.seed},
                       {"skipped_jlp", rec.skipped_jlp},
                       {"epsilon_observed", rec.epsilon_observed},
                       {"optimum_exact_zero", rec.optimum_exact_zero},
                       {"implication_held", rec.implication_held},
                       {"bound_held", rec.bound_held},
                       {"steps_below_threshold", rec.steps_below_threshold}});
  }
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

std::string massart_campaign_csv(const MassartCampaignReport& r) {
  std::string out =
      "trial,seed,skipped_jlp,epsilon_observed,optimum_exact_zero,"
      "implication_held,bound_held,steps_below_threshold\n";
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    const MassartTrialRecord& rec = r.records[t];
    out += std::to_string(t);
    out += ',';
    out += std::to_string(rec.seed);
    out += ',';
    out += rec.skipped_jlp ? '1' : '0';
    out += ',';
    put_num(out, rec.epsilon_observed);
    out += ',';
    out += rec.optimum_exact_zero ? '1' : '0';
    out += ',';
    out += rec.implication_held ? '1' : '0';
    out += ',';
    out += rec.bound_held ? '1' : '0';
    out += ',';
    out += std::to_string(rec.steps_below_threshold);
    out += '\n';
  }
  return out;
}

std::string lemma_campaign_json(const LemmaCampaignReport& r) {
  const auto counts = [](const OracleCounts& c) {
    return nlohmann::json{
        {"draws", c.draws}, {"premise_hits", c.premise_hits}, {"violations", c.violations}};
  };
  nlohmann::json j;
  j["campaign"] = "lemmas";
  j["epsilon"] = r.lemmas.epsilon;
  j["seed"] = r.lemmas.seed;
  j["epsilon_observed"] = r.epsilon_observed;
  j["violations"] = r.violations;
  j["lemmas"] = {{"norm_sandwich", counts(r.lemmas.norm_sandwich)},
                 {"order_preservation", counts(r.lemmas.order_preservation)},
                 {"risk_transfer", counts(r.lemmas.risk_transfer)},
                 {"sublevel_radius", counts(r.lemmas.sublevel_radius)}};
  return j.dump(2) + "\n";
}

}  // namespace jle
