#include "corral/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "corral/master.hpp"

namespace corral::harness {
namespace {

std::size_t doubling_limit_for(std::size_t horizon) {
  return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(horizon))));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Running regret accounting against one comparator class.
struct RegretTracker {
  envs::RegretBaseline baseline;
  double cum_baseline = 0.0;
  double pseudo = 0.0;

  void add(std::size_t t, ContextId x, double played_expected, const envs::Environment& env) {
    cum_baseline += baseline.per_round[t - 1];
    pseudo += played_expected - env.expected_loss(baseline.best_policy[x]);
  }
};

struct CorralBases {
  std::vector<std::unique_ptr<bases::BaseAlgorithm>> algos;
  std::vector<PolicyClass> spaces;
};

CorralBases build_bases(const ExperimentConfig& cfg, const envs::Environment& env, std::size_t horizon,
                        std::uint64_t seed, const std::vector<double>& ranges) {
  CorralBases out;
  const PolicyClass env_policies = env.default_policies();
  for (std::size_t i = 0; i < cfg.bases.size(); ++i) {
    out.algos.push_back(make_base(cfg.bases[i], env.num_arms(), env_policies, horizon, ranges[i],
                                  Rng::stream(seed, "base", i)));
    out.spaces.push_back(out.algos.back()->decision_space(env.num_contexts()));
  }
  return out;
}

void emit(const RecordSink& sink, RoundRecord&& record) {
  if (sink) sink(record);
}

// The CORRAL round loop for one seed over an already-built environment and bases.
SeedRun corral_loop(const std::string& run_id, std::uint64_t seed, std::size_t horizon, double eta0,
                    master::RestartPolicy restart, master::Estimator estimator,
                    envs::Environment& env, CorralBases& b, const RecordSink& sink) {
  const std::size_t m = b.algos.size();
  auto state = master::init_master(eta0, m, horizon, restart);
  Rng master_rng = Rng::stream(seed, "master");

  RegretTracker overall{env.baseline(policy_union(b.spaces), horizon)};
  std::vector<RegretTracker> per_base;
  for (const auto& space : b.spaces) per_base.push_back({env.baseline(space, horizon)});

  SeedRun run;
  run.seed = seed;
  run.horizon = horizon;
  run.base_selections.assign(m, 0);
  run.min_rho_pbar = 1e300;
  std::vector<DecisionId> proposals(m);
  double cum_loss = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const ContextId x = env.next_round();
    for (std::size_t i = 0; i < m; ++i) proposals[i] = b.algos[i]->propose(x);
    const auto choice = master::choose(state, proposals, master_rng);
    env.commit(choice.decision);
    const double raw = env.loss(choice.decision);
    const double expected = env.expected_loss(choice.decision);

    const auto outcome = master::feedback(state, choice, raw, estimator, proposals);
    for (std::size_t i = 0; i < m; ++i) b.algos[i]->update(outcome.packets[i]);
    for (std::size_t i : outcome.restarts) b.algos[i]->reset(state.rho[i]);

    cum_loss += raw;
    overall.add(t, x, expected, env);
    for (auto& tr : per_base) tr.add(t, x, expected, env);
    ++run.base_selections[choice.chosen_base];
    for (std::size_t i = 0; i < m; ++i) run.min_rho_pbar = std::min(run.min_rho_pbar, state.rho[i] * state.p_bar[i]);
    if (t == horizon / 2) run.half_pseudo_regret = overall.pseudo;

    if (sink) {
      RoundRecord rec;
      rec.run_id = run_id;
      rec.seed = seed;
      rec.t = t;
      rec.chosen_base = choice.chosen_base;
      rec.decision = choice.decision;
      rec.raw_loss = raw;
      rec.cum_loss = cum_loss;
      rec.cum_regret = cum_loss - overall.cum_baseline;
      rec.cum_pseudo_regret = overall.pseudo;
      rec.p_bar.assign(state.p_bar.begin(), state.p_bar.end());
      rec.eta.assign(state.eta.rates().begin(), state.eta.rates().end());
      rec.rho = state.rho;
      rec.restart_flags.assign(m, false);
      for (std::size_t i : outcome.threshold_events) rec.restart_flags[i] = true;
      emit(sink, std::move(rec));
    }
  }
  master::check_invariants(state);

  run.final_regret = cum_loss - overall.cum_baseline;
  run.final_pseudo_regret = overall.pseudo;
  for (const auto& tr : per_base) run.per_base_pseudo_regret.push_back(tr.pseudo);
  run.doubling_counts = state.threshold_events;
  run.max_eta_ratio = 1.0;
  for (std::size_t i = 0; i < m; ++i) run.max_eta_ratio = std::max(run.max_eta_ratio, state.eta[i] / eta0);
  run.final_rho = state.rho;
  run.final_p_bar.assign(state.p_bar.begin(), state.p_bar.end());
  return run;
}

// A single base fed directly by the environment.
SeedRun standalone_loop(const std::string& run_id, std::uint64_t seed, std::size_t horizon,
                        envs::Environment& env, bases::BaseAlgorithm& base, const RecordSink& sink) {
  const PolicyClass space = base.decision_space(env.num_contexts());
  RegretTracker tracker{env.baseline(space, horizon)};
  SeedRun run;
  run.seed = seed;
  run.horizon = horizon;
  run.base_selections = {horizon};
  run.min_rho_pbar = base.range();
  double cum_loss = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const ContextId x = env.next_round();
    const DecisionId a = base.propose(x);
    env.commit(a);
    const double emitted = env.loss(a);
    const double expected = env.expected_loss(a);
    base.update(env.feedback(a));

    cum_loss += emitted;
    tracker.add(t, x, expected, env);
    if (t == horizon / 2) run.half_pseudo_regret = tracker.pseudo;
    if (sink) {
      RoundRecord rec;
      rec.run_id = run_id;
      rec.seed = seed;
      rec.t = t;
      rec.chosen_base = 0;
      rec.decision = a;
      rec.raw_loss = emitted;
      rec.cum_loss = cum_loss;
      rec.cum_regret = cum_loss - tracker.cum_baseline;
      rec.cum_pseudo_regret = tracker.pseudo;
      rec.p_bar = {1.0};
      rec.eta = {0.0};
      rec.rho = {base.range()};
      rec.restart_flags = {false};
      emit(sink, std::move(rec));
    }
  }
  run.final_regret = cum_loss - tracker.cum_baseline;
  run.final_pseudo_regret = tracker.pseudo;
  run.per_base_pseudo_regret = {tracker.pseudo};
  run.doubling_counts = {0};
  run.final_rho = {base.range()};
  run.final_p_bar = {1.0};
  return run;
}

std::vector<std::uint64_t> sorted_seeds(const ExperimentConfig& cfg) {
  auto seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

envs::LowerBoundEnv::Variant lower_bound_variant(const ExperimentConfig& cfg) {
  return cfg.environment.kind == envs::EnvKind::kLowerBound ? cfg.environment.variant
                                                           : envs::LowerBoundEnv::Variant::kRandom;
}

nlohmann::json matrix_json(const std::vector<std::vector<double>>& m) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

double compute_regret(std::span<const RoundRecord> records, const envs::RegretBaseline& baseline) {
  if (records.empty()) throw Error(ErrorKind::kIntegrity, "no rounds recorded");
  double total = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].t != k + 1) {
      throw Error(ErrorKind::kIntegrity, "expected round " + std::to_string(k + 1) + ", found " +
                                             std::to_string(records[k].t));
    }
    total += records[k].raw_loss;
  }
  return total - baseline.cumulative(records.size());
}

RegretSummary summarize(std::string label, std::vector<SeedRun> runs, double eta0) {
  std::sort(runs.begin(), runs.end(), [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });
  RegretSummary s;
  s.label = std::move(label);
  s.eta0 = eta0;
  if (runs.empty()) return s;
  s.horizon = runs.front().horizon;
  s.num_bases = runs.front().per_base_pseudo_regret.size();
  s.doubling_limit = doubling_limit_for(s.horizon);
  s.min_rho_pbar = 1e300;
  s.mean_per_base_pseudo_regret.assign(s.num_bases, 0.0);
  s.mean_final_p_bar.assign(runs.front().final_p_bar.size(), 0.0);
  for (const auto& r : runs) {
    s.seeds.push_back(r.seed);
    s.final_regret.push_back(r.final_regret);
    s.final_pseudo_regret.push_back(r.final_pseudo_regret);
    s.half_pseudo_regret.push_back(r.half_pseudo_regret);
    s.per_base_pseudo_regret.push_back(r.per_base_pseudo_regret);
    s.doubling_counts.push_back(r.doubling_counts);
    s.final_rho.push_back(r.final_rho);
    for (std::size_t i = 0; i < s.num_bases; ++i) s.mean_per_base_pseudo_regret[i] += r.per_base_pseudo_regret[i];
    for (std::size_t i = 0; i < s.mean_final_p_bar.size(); ++i) s.mean_final_p_bar[i] += r.final_p_bar[i];
    for (std::size_t c : r.doubling_counts) s.max_doubling_count = std::max(s.max_doubling_count, c);
    s.max_eta_ratio = std::max(s.max_eta_ratio, r.max_eta_ratio);
    s.min_rho_pbar = std::min(s.min_rho_pbar, r.min_rho_pbar);
  }
  const double n = static_cast<double>(runs.size());
  for (double& v : s.mean_per_base_pseudo_regret) v /= n;
  for (double& v : s.mean_final_p_bar) v /= n;
  s.mean_regret = mean(s.final_regret);
  s.stderr_regret = standard_error(s.final_regret);
  s.mean_pseudo_regret = mean(s.final_pseudo_regret);
  s.stderr_pseudo_regret = standard_error(s.final_pseudo_regret);
  s.mean_half_pseudo_regret = mean(s.half_pseudo_regret);
  return s;
}

// ---------------------------------------------------------------------------

LogAudit::LogAudit(double eta0, std::size_t horizon)
    : eta0_(eta0), limit_(doubling_limit_for(horizon)) {}

void LogAudit::operator()(const RoundRecord& r) {
  if (r.t == 1 || r.seed != current_seed_ || r.run_id != current_run_) {
    counts_.assign(r.restart_flags.size(), 0);
    current_seed_ = r.seed;
    current_run_ = r.run_id;
  }
  ++rounds_;
  for (std::size_t i = 0; i < r.restart_flags.size(); ++i) {
    if (r.restart_flags[i]) ++counts_[i];
    if (counts_[i] > limit_) ++violations_;
    const double ratio = r.eta[i] / eta0_;
    max_eta_ratio_ = std::max(max_eta_ratio_, ratio);
    if (ratio > 5.0) ++violations_;
    const double product = r.rho[i] * r.p_bar[i];
    min_rho_pbar_ = std::min(min_rho_pbar_, product);
    if (product < 1.0) ++violations_;
  }
}

std::size_t LogAudit::max_doubling_count() const {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

// ---------------------------------------------------------------------------

std::unique_ptr<envs::Environment> make_environment(const EnvironmentSpec& spec, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "environment");
  switch (spec.kind) {
    case envs::EnvKind::kStochasticMab: return envs::stochastic_mab(spec.means, rng);
    case envs::EnvKind::kAdversarialMab: return envs::adversarial_mab(spec.script);
    case envs::EnvKind::kStochasticContextual:
      return envs::stochastic_contextual(spec.context_probs, spec.policies, spec.cond_means, rng);
    case envs::EnvKind::kLowerBound: return envs::lower_bound_env(rng, spec.variant);
    case envs::EnvKind::kInduced: break;
  }
  throw Error(ErrorKind::kConfig, "environment kind cannot be built from a config");
}

std::unique_ptr<bases::BaseAlgorithm> make_base(const BaseSpec& spec, std::size_t num_arms,
                                                const PolicyClass& env_policies, std::size_t horizon,
                                                double rho, Rng rng) {
  using bases::BaseKind;
  const std::size_t arms = spec.arms.value_or(num_arms);
  const PolicyClass& policies = spec.policies.empty() ? env_policies : spec.policies;
  switch (spec.kind) {
    case BaseKind::kExp3:
      return std::make_unique<bases::Exp3>(arms, horizon, rho, std::move(rng),
                                           bases::Exp3Options{spec.range_aware});
    case BaseKind::kExp4: return bases::exp4(policies, arms, horizon, rho, std::move(rng));
    case BaseKind::kEpochGreedy: return bases::epoch_greedy(policies, arms, horizon, rho, std::move(rng));
    case BaseKind::kThompsonSampling:
      if (spec.prior.size() != arms) {
        throw Error(ErrorKind::kConfig, "thompson prior has " + std::to_string(spec.prior.size()) +
                                            " arms, environment has " + std::to_string(arms));
      }
      return bases::thompson_sampling(spec.prior, rho, std::move(rng));
    case BaseKind::kUcb1: {
      auto b = std::make_unique<bases::Ucb1>(arms, rho);
      return b;
    }
    case BaseKind::kPathological: {
      auto b = std::make_unique<bases::PathologicalBase>(spec.side, std::move(rng), spec.observe_unselected);
      b->reset(rho);
      return b;
    }
  }
  throw Error(ErrorKind::kConfig, "unknown base kind");
}

// ---------------------------------------------------------------------------

namespace {

ExperimentResult corral_at_horizon(const ExperimentConfig& cfg, std::size_t horizon,
                                   const std::string& run_id, const RecordSink& sink) {
  const double eta0 = master_eta(cfg, horizon);
  ExperimentResult result;
  for (std::uint64_t seed : sorted_seeds(cfg)) {
    auto env = make_environment(cfg.environment, seed);
    const std::size_t m = cfg.bases.size();
    std::vector<double> ranges(m);
    for (std::size_t i = 0; i < m; ++i) {
      ranges[i] = cfg.master.restart == master::RestartPolicy::kRestartOnDoubling
                      ? 2.0 * static_cast<double>(m)
                      : cfg.bases[i].rho;
    }
    auto b = build_bases(cfg, *env, horizon, seed, ranges);
    result.runs.push_back(corral_loop(run_id, seed, horizon, eta0, cfg.master.restart,
                                      cfg.master.estimator, *env, b, sink));
  }
  result.summary = summarize(run_id, result.runs, eta0);
  if (cfg.report_prior_entropy) {
    std::vector<std::vector<bases::BetaPrior>> priors;
    for (const auto& b : cfg.bases) {
      if (b.kind == bases::BaseKind::kThompsonSampling) priors.push_back(b.prior);
    }
    result.summary.prior_entropy = estimate_prior_entropy(priors, 100000, Rng::stream(0, "entropy"));
  }
  return result;
}

ExperimentResult standalone_at_horizon(const ExperimentConfig& cfg, std::size_t horizon,
                                       const std::string& run_id, std::optional<double> induced_rho,
                                       const RecordSink& sink) {
  ExperimentResult result;
  const BaseSpec& spec = cfg.bases.front();
  for (std::uint64_t seed : sorted_seeds(cfg)) {
    std::unique_ptr<envs::Environment> env = make_environment(cfg.environment, seed);
    if (induced_rho) {
      const double p = 1.0 / *induced_rho;
      env = envs::induced_env(std::move(env), [p](std::size_t) { return p; }, Rng::stream(seed, "induced"));
    }
    auto base = make_base(spec, env->num_arms(), env->default_policies(), horizon,
                          induced_rho.value_or(spec.rho), Rng::stream(seed, "base", 0));
    result.runs.push_back(standalone_loop(run_id, seed, horizon, *env, *base, sink));
  }
  result.summary = summarize(run_id, result.runs, 0.0);
  return result;
}

}  // namespace

ExperimentResult run_corral(const ExperimentConfig& cfg, const RecordSink& sink) {
  validate(cfg, Scenario::kCorralRun);
  return corral_at_horizon(cfg, cfg.horizon, cfg.name.empty() ? "corral" : cfg.name, sink);
}

ExperimentResult run_standalone(const ExperimentConfig& cfg, const RecordSink& sink) {
  validate(cfg, Scenario::kStandaloneRun);
  return standalone_at_horizon(cfg, cfg.horizon, cfg.name.empty() ? "standalone" : cfg.name,
                               std::nullopt, sink);
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::kContract, "slope fit needs at least two paired points");
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
      throw Error(ErrorKind::kIntegrity, "log-log fit needs positive values");
    }
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorKind::kContract, "slope fit needs distinct x values");
  return sxy / sxx;
}

StabilityResult run_stability_test(const ExperimentConfig& cfg, const RecordSink& sink) {
  validate(cfg, Scenario::kStabilityTest);
  StabilityResult out;
  out.rho_levels = cfg.rho_levels;
  std::vector<double> regrets;
  for (double rho : cfg.rho_levels) {
    std::ostringstream id;
    id << "rho=" << rho;
    auto level = standalone_at_horizon(cfg, cfg.horizon, id.str(), rho, sink);
    regrets.push_back(level.summary.mean_pseudo_regret);
    out.levels.push_back(std::move(level.summary));
  }
  out.fitted_alpha = log_log_slope(out.rho_levels, regrets);

  auto env = make_environment(cfg.environment, 0);
  auto base = make_base(cfg.bases.front(), env->num_arms(), env->default_policies(), cfg.horizon,
                        cfg.bases.front().rho, Rng(0));
  if (auto cert = base->certificate()) out.certificate_alpha = cert->alpha;
  return out;
}

LowerBoundResult run_lowerbound_demo(const ExperimentConfig& cfg, const RecordSink& sink) {
  validate(cfg, Scenario::kLowerBoundDemo);
  const std::size_t horizon = cfg.horizon;
  const auto variant = lower_bound_variant(cfg);
  LowerBoundResult out;

  std::vector<SeedRun> naive_runs;
  double naive_rate = 0.0;
  for (std::uint64_t seed : sorted_seeds(cfg)) {
    auto env = envs::lower_bound_env(Rng::stream(seed, "environment"), variant);
    auto [b1, b2] = bases::pathological_pair(Rng::stream(seed, "base", 0), Rng::stream(seed, "base", 1),
                                             /*observe_unselected=*/true);
    master::NaiveExp3Master naive(2, horizon, cfg.master.naive_eta);
    naive_rate = naive.rate();

    Rng master_rng = Rng::stream(seed, "master");
    const PolicyClass space = b1->decision_space(1);
    RegretTracker tracker{env->baseline(space, horizon)};
    SeedRun run;
    run.seed = seed;
    run.horizon = horizon;
    run.base_selections.assign(2, 0);
    double cum_loss = 0.0;
    std::vector<DecisionId> proposals(2);
    for (std::size_t t = 1; t <= horizon; ++t) {
      const ContextId x = env->next_round();
      proposals[0] = b1->propose(x);
      proposals[1] = b2->propose(x);
      const auto choice = naive.choose(proposals, master_rng);
      const std::size_t chosen = choice.chosen_base;
      const DecisionId a = choice.decision;
      env->commit(a);
      const double raw = env->loss(a);
      const auto packets = naive.feedback(choice, raw, proposals);
      b1->update(packets[0]);
      b2->update(packets[1]);

      cum_loss += raw;
      tracker.add(t, x, env->expected_loss(a), *env);
      ++run.base_selections[chosen];
      if (t == horizon / 2) run.half_pseudo_regret = tracker.pseudo;
      if (sink) {
        RoundRecord rec;
        rec.run_id = "naive-exp3";
        rec.seed = seed;
        rec.t = t;
        rec.chosen_base = chosen;
        rec.decision = a;
        rec.raw_loss = raw;
        rec.cum_loss = cum_loss;
        rec.cum_regret = cum_loss - tracker.cum_baseline;
        rec.cum_pseudo_regret = tracker.pseudo;
        rec.p_bar = naive.distribution();
        rec.eta = {naive.rate(), naive.rate()};
        rec.rho = {0.0, 0.0};
        rec.restart_flags = {false, false};
        sink(rec);
      }
    }
    run.final_regret = cum_loss - tracker.cum_baseline;
    run.final_pseudo_regret = tracker.pseudo;
    run.per_base_pseudo_regret = {tracker.pseudo, tracker.pseudo};
    run.doubling_counts = {0, 0};
    run.final_rho = {0.0, 0.0};
    run.final_p_bar = naive.distribution();
    naive_runs.push_back(std::move(run));
  }
  out.naive = summarize("naive-exp3", std::move(naive_runs), naive_rate);

  const double eta0 = master_eta(cfg, horizon);
  std::vector<SeedRun> corral_runs;
  for (std::uint64_t seed : sorted_seeds(cfg)) {
    auto env = envs::lower_bound_env(Rng::stream(seed, "environment"), variant);
    auto [b1, b2] = bases::pathological_pair(Rng::stream(seed, "base", 0), Rng::stream(seed, "base", 1));
    CorralBases b;
    b.algos.push_back(std::move(b1));
    b.algos.push_back(std::move(b2));
    for (const auto& algo : b.algos) b.spaces.push_back(algo->decision_space(1));
    corral_runs.push_back(corral_loop("corral", seed, horizon, eta0, cfg.master.restart,
                                      cfg.master.estimator, *env, b, sink));
  }
  out.corral = summarize("corral", std::move(corral_runs), eta0);

  std::vector<SeedRun> matched_runs;
  std::vector<double> late;
  for (std::uint64_t seed : sorted_seeds(cfg)) {
    auto env = envs::lower_bound_env(Rng::stream(seed, "environment"), envs::LowerBoundEnv::Variant::kE1);
    bases::PathologicalBase b1(0, Rng::stream(seed, "base", 0));
    auto run = standalone_loop("matched", seed, horizon, *env, b1, {});
    late.push_back(run.final_pseudo_regret - run.half_pseudo_regret);
    matched_runs.push_back(std::move(run));
  }
  out.matched = summarize("matched-standalone", std::move(matched_runs), 0.0);
  out.matched_late_regret = mean(late);

  out.naive_ratio = out.naive.mean_pseudo_regret / out.naive.mean_half_pseudo_regret;
  out.corral_ratio = out.corral.mean_pseudo_regret / out.corral.mean_half_pseudo_regret;
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const RecordSink& sink) {
  validate(cfg, Scenario::kSweep);
  SweepResult out;
  out.scenario = cfg.sweep.scenario;
  out.horizons = cfg.sweep.horizons;
  std::vector<double> xs, ys;
  for (std::size_t h : cfg.sweep.horizons) {
    const std::string id = "T=" + std::to_string(h);
    auto point = cfg.sweep.scenario == Scenario::kCorralRun
                     ? corral_at_horizon(cfg, h, id, sink)
                     : standalone_at_horizon(cfg, h, id, std::nullopt, sink);
    xs.push_back(static_cast<double>(h));
    ys.push_back(point.summary.mean_pseudo_regret);
    out.points.push_back(std::move(point.summary));
  }
  out.fitted_exponent = log_log_slope(xs, ys);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> estimate_prior_entropy(const std::vector<std::vector<bases::BetaPrior>>& priors,
                                           std::size_t num_samples, Rng rng) {
  if (num_samples < 10000) throw Error(ErrorKind::kConfig, "need at least 10^4 samples");
  std::vector<double> out;
  for (const auto& prior : priors) {
    std::vector<std::size_t> tally(prior.size(), 0);
    for (std::size_t s = 0; s < num_samples; ++s) {
      std::size_t best = 0;
      double best_mean = 2.0;
      for (std::size_t a = 0; a < prior.size(); ++a) {
        const double mu = rng.beta(prior[a].one_loss, prior[a].zero_loss);
        if (mu < best_mean) {
          best_mean = mu;
          best = a;
        }
      }
      ++tally[best];
    }
    double h = 0.0;
    for (std::size_t c : tally) {
      if (c == 0) continue;
      const double q = static_cast<double>(c) / static_cast<double>(num_samples);
      h -= q * std::log(q);
    }
    out.push_back(h);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string csv_header(std::size_t m) {
  std::string h = "run_id,seed,t,chosen_base,decision,raw_loss,cum_loss,cum_regret,cum_pseudo_regret";
  for (const char* group : {"p_bar", "eta", "rho"}) {
    for (std::size_t i = 1; i <= m; ++i) h += "," + std::string(group) + "_" + std::to_string(i);
  }
  h += ",restart_flags";
  return h;
}

std::string csv_row(const RoundRecord& r) {
  std::string line = r.run_id;
  line += "," + std::to_string(r.seed) + "," + std::to_string(r.t) + "," + std::to_string(r.chosen_base) +
          "," + std::to_string(r.decision);
  for (double v : {r.raw_loss, r.cum_loss, r.cum_regret, r.cum_pseudo_regret}) line += "," + format_double(v);
  for (const auto* group : {&r.p_bar, &r.eta, &r.rho}) {
    for (double v : *group) line += "," + format_double(v);
  }
  line += ",";
  for (bool f : r.restart_flags) line += f ? '1' : '0';
  return line;
}

CsvSink::CsvSink(std::ostream& out) : out_(&out) {}

void CsvSink::operator()(const RoundRecord& r) {
  if (width_ == 0) {
    width_ = r.p_bar.size();
    *out_ << csv_header(width_) << '\n';
  } else if (r.p_bar.size() != width_) {
    throw Error(ErrorKind::kIntegrity, "records with different base counts in one CSV");
  }
  *out_ << csv_row(r) << '\n';
}

nlohmann::json to_json(const RegretSummary& s) {
  nlohmann::json j;
  j["label"] = s.label;
  j["horizon"] = s.horizon;
  j["num_bases"] = s.num_bases;
  j["eta0"] = s.eta0;
  j["seeds"] = s.seeds;
  j["final_regret"] = s.final_regret;
  j["mean_regret"] = s.mean_regret;
  j["stderr_regret"] = s.stderr_regret;
  j["final_pseudo_regret"] = s.final_pseudo_regret;
  j["mean_pseudo_regret"] = s.mean_pseudo_regret;
  j["stderr_pseudo_regret"] = s.stderr_pseudo_regret;
  j["half_horizon_pseudo_regret"] = s.half_pseudo_regret;
  j["mean_half_horizon_pseudo_regret"] = s.mean_half_pseudo_regret;
  j["per_base_pseudo_regret"] = matrix_json(s.per_base_pseudo_regret);
  j["mean_per_base_pseudo_regret"] = s.mean_per_base_pseudo_regret;
  j["doubling_counts"] = s.doubling_counts;
  j["max_doubling_count"] = s.max_doubling_count;
  j["doubling_limit"] = s.doubling_limit;
  j["max_eta_ratio"] = s.max_eta_ratio;
  j["min_rho_pbar"] = s.min_rho_pbar;
  j["final_rho"] = matrix_json(s.final_rho);
  j["mean_final_p_bar"] = s.mean_final_p_bar;
  if (!s.prior_entropy.empty()) j["prior_entropy"] = s.prior_entropy;
  return j;
}

nlohmann::json to_json(const StabilityResult& r) {
  nlohmann::json j;
  j["scenario"] = to_string(Scenario::kStabilityTest);
  j["rho_levels"] = r.rho_levels;
  j["fitted_alpha"] = r.fitted_alpha;
  j["certificate_alpha"] = r.certificate_alpha ? nlohmann::json(*r.certificate_alpha) : nlohmann::json();
  j["levels"] = nlohmann::json::array();
  for (const auto& s : r.levels) j["levels"].push_back(to_json(s));
  return j;
}

nlohmann::json to_json(const LowerBoundResult& r) {
  nlohmann::json j;
  j["scenario"] = to_string(Scenario::kLowerBoundDemo);
  j["naive"] = to_json(r.naive);
  j["corral"] = to_json(r.corral);
  j["matched_standalone"] = to_json(r.matched);
  j["naive_ratio"] = r.naive_ratio;
  j["corral_ratio"] = r.corral_ratio;
  j["matched_late_regret"] = r.matched_late_regret;
  return j;
}

nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json j;
  j["scenario"] = to_string(Scenario::kSweep);
  j["swept"] = to_string(r.scenario);
  j["horizons"] = r.horizons;
  j["fitted_exponent"] = r.fitted_exponent;
  j["points"] = nlohmann::json::array();
  for (const auto& s : r.points) j["points"].push_back(to_json(s));
  return j;
}

// ---------------------------------------------------------------------------

namespace {

std::string summary_line(const RegretSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s T=%-7zu seeds=%-3zu pseudo-regret %.3f +- %.3f  regret %.3f +- %.3f\n",
                s.label.c_str(), s.horizon, s.seeds.size(), s.mean_pseudo_regret, s.stderr_pseudo_regret,
                s.mean_regret, s.stderr_regret);
  return buf;
}

}  // namespace

ScenarioOutput run_scenario(const ExperimentConfig& config, Scenario scenario, std::ostream* rounds,
                            const RecordSink& observer) {
  std::optional<CsvSink> csv;
  if (rounds) csv.emplace(*rounds);
  RecordSink sink;
  if (csv || observer) {
    sink = [&](const RoundRecord& r) {
      if (csv) (*csv)(r);
      if (observer) observer(r);
    };
  }

  ScenarioOutput out;
  char buf[128];
  switch (scenario) {
    case Scenario::kCorralRun:
    case Scenario::kStandaloneRun: {
      auto r = scenario == Scenario::kCorralRun ? run_corral(config, sink) : run_standalone(config, sink);
      out.summary = to_json(r.summary);
      out.summary["scenario"] = to_string(scenario);
      out.report = summary_line(r.summary);
      break;
    }
    case Scenario::kStabilityTest: {
      auto r = run_stability_test(config, sink);
      out.summary = to_json(r);
      for (const auto& s : r.levels) out.report += summary_line(s);
      std::snprintf(buf, sizeof buf, "fitted alpha %.4f", r.fitted_alpha);
      out.report += buf;
      if (r.certificate_alpha) {
        std::snprintf(buf, sizeof buf, "  (certificate %.4f)", *r.certificate_alpha);
        out.report += buf;
      }
      out.report += '\n';
      break;
    }
    case Scenario::kLowerBoundDemo: {
      auto r = run_lowerbound_demo(config, sink);
      out.summary = to_json(r);
      out.report = summary_line(r.naive) + summary_line(r.corral) + summary_line(r.matched);
      std::snprintf(buf, sizeof buf, "regret(T)/regret(T/2): naive %.3f  corral %.3f\n", r.naive_ratio,
                    r.corral_ratio);
      out.report += buf;
      break;
    }
    case Scenario::kSweep: {
      auto r = run_sweep(config, sink);
      out.summary = to_json(r);
      for (const auto& s : r.points) out.report += summary_line(s);
      std::snprintf(buf, sizeof buf, "fitted exponent %.4f\n", r.fitted_exponent);
      out.report += buf;
      break;
    }
  }
  if (!config.name.empty()) out.summary["name"] = config.name;
  return out;
}

}  // namespace corral::harness
