#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corral/bases.hpp"
#include "corral/config.hpp"
#include "corral/envs.hpp"

namespace corral::harness {

/// One logged round. p_bar, eta and rho hold the master state after the
/// round's update; restart_flags marks bases whose threshold fired.
struct RoundRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::size_t chosen_base = 0;
  DecisionId decision = 0;
  double raw_loss = 0.0;
  double cum_loss = 0.0;
  double cum_regret = 0.0;
  double cum_pseudo_regret = 0.0;
  std::vector<double> p_bar;
  std::vector<double> eta;
  std::vector<double> rho;
  std::vector<bool> restart_flags;

  bool operator==(const RoundRecord&) const = default;
};

using RecordSink = std::function<void(const RoundRecord&)>;

/// Everything kept about one seed once its rounds have been streamed out.
struct SeedRun {
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  double final_regret = 0.0;
  double final_pseudo_regret = 0.0;
  double half_pseudo_regret = 0.0;
  /// Pseudo-regret against each base's own decision space.
  std::vector<double> per_base_pseudo_regret;
  std::vector<std::size_t> doubling_counts;
  double max_eta_ratio = 1.0;
  double min_rho_pbar = 0.0;
  std::vector<double> final_rho;
  std::vector<double> final_p_bar;
  std::vector<std::size_t> base_selections;
};

struct RegretSummary {
  std::string label;
  std::size_t horizon = 0;
  std::size_t num_bases = 0;
  double eta0 = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_regret;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
  std::vector<double> final_pseudo_regret;
  double mean_pseudo_regret = 0.0;
  double stderr_pseudo_regret = 0.0;
  std::vector<double> half_pseudo_regret;
  double mean_half_pseudo_regret = 0.0;
  std::vector<std::vector<double>> per_base_pseudo_regret;
  std::vector<double> mean_per_base_pseudo_regret;
  std::vector<std::vector<std::size_t>> doubling_counts;
  std::size_t max_doubling_count = 0;
  std::size_t doubling_limit = 0;
  double max_eta_ratio = 1.0;
  double min_rho_pbar = 0.0;
  std::vector<std::vector<double>> final_rho;
  std::vector<double> mean_final_p_bar;
  std::vector<double> prior_entropy;
};

double mean(std::span<const double> xs);
/// Sample standard deviation over sqrt(n); zero for fewer than two values.
double standard_error(std::span<const double> xs);

/// Integrity-checked realized regret of one seed: sum of raw losses minus the
/// baseline's cumulative loss over the same rounds. Rounds must be 1..T.
double compute_regret(std::span<const RoundRecord> records, const envs::RegretBaseline& baseline);

/// Aggregates seeds (sorted by seed first, so order of completion is irrelevant).
RegretSummary summarize(std::string label, std::vector<SeedRun> runs, double eta0);

/// Schedule invariants re-derived from the log alone.
class LogAudit {
 public:
  explicit LogAudit(double eta0, std::size_t horizon);
  void operator()(const RoundRecord& record);

  std::size_t rounds() const noexcept { return rounds_; }
  std::size_t violations() const noexcept { return violations_; }
  std::size_t max_doubling_count() const;
  double max_eta_ratio() const noexcept { return max_eta_ratio_; }
  double min_rho_pbar() const noexcept { return min_rho_pbar_; }
  std::size_t doubling_limit() const noexcept { return limit_; }

 private:
  double eta0_;
  std::size_t limit_;
  std::size_t rounds_ = 0;
  std::size_t violations_ = 0;
  double max_eta_ratio_ = 0.0;
  double min_rho_pbar_ = 1e300;
  std::vector<std::size_t> counts_;
  std::uint64_t current_seed_ = 0;
  std::string current_run_;
};

struct ExperimentResult {
  RegretSummary summary;
  std::vector<SeedRun> runs;
};

std::unique_ptr<envs::Environment> make_environment(const EnvironmentSpec& spec, std::uint64_t seed);
std::unique_ptr<bases::BaseAlgorithm> make_base(const BaseSpec& spec, std::size_t num_arms,
                                                const PolicyClass& env_policies, std::size_t horizon,
                                                double rho, Rng rng);

ExperimentResult run_corral(const ExperimentConfig& config, const RecordSink& sink = {});
ExperimentResult run_standalone(const ExperimentConfig& config, const RecordSink& sink = {});

struct StabilityResult {
  std::vector<double> rho_levels;
  std::vector<RegretSummary> levels;
  double fitted_alpha = 0.0;
  std::optional<double> certificate_alpha;
};

/// Slope of ln(y) against ln(x) by least squares.
double log_log_slope(std::span<const double> x, std::span<const double> y);

StabilityResult run_stability_test(const ExperimentConfig& config, const RecordSink& sink = {});

struct LowerBoundResult {
  RegretSummary naive;
  RegretSummary corral;
  RegretSummary matched;
  double naive_ratio = 0.0;
  double corral_ratio = 0.0;
  /// Mean of regret(T) - regret(T/2) for the matched standalone base.
  double matched_late_regret = 0.0;
};

LowerBoundResult run_lowerbound_demo(const ExperimentConfig& config, const RecordSink& sink = {});

struct SweepResult {
  Scenario scenario;
  std::vector<std::size_t> horizons;
  std::vector<RegretSummary> points;
  double fitted_exponent = 0.0;
};

SweepResult run_sweep(const ExperimentConfig& config, const RecordSink& sink = {});

/// Monte-Carlo entropy (nats) of the distribution of the best arm under each
/// prior. Descriptive only.
std::vector<double> estimate_prior_entropy(const std::vector<std::vector<bases::BetaPrior>>& priors,
                                           std::size_t num_samples, Rng rng);

/// Header plus one line per record; floats at 17 significant digits.
std::string csv_header(std::size_t num_bases);
std::string csv_row(const RoundRecord& record);

class CsvSink {
 public:
  explicit CsvSink(std::ostream& out);
  void operator()(const RoundRecord& record);

 private:
  std::ostream* out_;
  std::size_t width_ = 0;
};

nlohmann::json to_json(const RegretSummary& summary);
nlohmann::json to_json(const StabilityResult& result);
nlohmann::json to_json(const LowerBoundResult& result);
nlohmann::json to_json(const SweepResult& result);

struct ScenarioOutput {
  /// Exactly what goes into summary.json.
  nlohmann::json summary;
  /// Human-readable console summary.
  std::string report;
};

/// Runs one scenario end to end. Rounds go to `rounds` as CSV when it is
/// non-null; `observer` sees every record as well.
ScenarioOutput run_scenario(const ExperimentConfig& config, Scenario scenario, std::ostream* rounds,
                            const RecordSink& observer = {});

}  // namespace corral::harness
