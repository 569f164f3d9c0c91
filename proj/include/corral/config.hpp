#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corral/bases.hpp"
#include "corral/core.hpp"
#include "corral/envs.hpp"
#include "corral/master.hpp"

namespace corral::harness {

enum class Scenario { kCorralRun, kStandaloneRun, kStabilityTest, kLowerBoundDemo, kSweep };

const char* to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);

struct EnvironmentSpec {
  envs::EnvKind kind = envs::EnvKind::kStochasticMab;
  std::vector<double> means;
  std::vector<std::vector<double>> script;
  std::vector<double> context_probs;
  std::vector<std::vector<double>> cond_means;
  PolicyClass policies;
  envs::LowerBoundEnv::Variant variant = envs::LowerBoundEnv::Variant::kRandom;

  std::size_t num_arms() const;
  std::size_t num_contexts() const;
};

struct BaseSpec {
  bases::BaseKind kind = bases::BaseKind::kExp3;
  std::string name;
  std::optional<std::size_t> arms;
  PolicyClass policies;
  std::vector<bases::BetaPrior> prior;
  double rho = 1.0;
  int side = 0;
  bool range_aware = true;
  bool observe_unselected = false;
  std::optional<double> regret_bound;
};

struct MasterSpec {
  std::optional<double> eta;
  /// Set for "tuned" / "tuned:R"; R itself may come from a base's regret_bound.
  bool tuned = false;
  std::optional<double> tuned_regret;
  master::RestartPolicy restart = master::RestartPolicy::kRestartOnDoubling;
  master::Estimator estimator = master::Estimator::kStandard;
  std::optional<double> naive_eta;
};

struct SweepSpec {
  Scenario scenario = Scenario::kCorralRun;
  std::vector<std::size_t> horizons;
};

struct ExperimentConfig {
  std::optional<Scenario> scenario;
  std::string name;
  EnvironmentSpec environment;
  std::vector<BaseSpec> bases;
  MasterSpec master;
  std::size_t horizon = 0;
  std::vector<std::uint64_t> seeds;
  std::string output;
  std::vector<double> rho_levels;
  SweepSpec sweep;
  bool write_rounds = true;
  bool report_prior_entropy = false;
};

/// Strict parse: unknown keys and wrongly typed values are kConfig errors.
/// Relative script_csv paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Scenario-specific checks (seed count, horizon, base count, ...).
void validate(const ExperimentConfig& config, Scenario scenario);

/// Master learning rate for a horizon: explicit eta or the tuned formula.
double master_eta(const ExperimentConfig& config, std::size_t horizon);

}  // namespace corral::harness
