#include "corral/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace corral::harness {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kConfig, where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) config_error(where, "expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) config_error(where, "unknown key '" + key + "'");
  }
}

const json& require(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) config_error(where, std::string("missing key '") + key + "'");
  return j.at(key);
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where, "expected a number");
  return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) config_error(where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) config_error(where, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) config_error(where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_numbers(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

PolicyClass as_policies(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where, "expected an array of policy tables");
  PolicyClass out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) config_error(at, "expected an array of actions");
    Policy pol;
    for (std::size_t x = 0; x < j[i].size(); ++x) pol.push_back(as_count(j[i][x], at));
    out.push_back(std::move(pol));
  }
  return out;
}

EnvironmentSpec parse_environment(const json& j, const std::string& base_dir) {
  const std::string where = "environment";
  require_object(j, where);
  const std::string kind = as_string(require(j, where, "kind"), where + ".kind");
  EnvironmentSpec spec;
  if (kind == "stochastic_mab") {
    check_keys(j, where, {"kind", "means"});
    spec.kind = envs::EnvKind::kStochasticMab;
    spec.means = as_numbers(require(j, where, "means"), where + ".means");
  } else if (kind == "adversarial_mab") {
    check_keys(j, where, {"kind", "script", "script_csv"});
    spec.kind = envs::EnvKind::kAdversarialMab;
    if (j.contains("script") == j.contains("script_csv")) {
      config_error(where, "give exactly one of 'script' or 'script_csv'");
    }
    if (j.contains("script")) {
      spec.script = as_matrix(j.at("script"), where + ".script");
    } else {
      std::filesystem::path p = as_string(j.at("script_csv"), where + ".script_csv");
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      spec.script = envs::load_loss_script(p.string());
    }
  } else if (kind == "stochastic_contextual") {
    check_keys(j, where, {"kind", "context_probs", "cond_means", "policies"});
    spec.kind = envs::EnvKind::kStochasticContextual;
    spec.context_probs = as_numbers(require(j, where, "context_probs"), where + ".context_probs");
    spec.cond_means = as_matrix(require(j, where, "cond_means"), where + ".cond_means");
    if (j.contains("policies")) spec.policies = as_policies(j.at("policies"), where + ".policies");
  } else if (kind == "lower_bound") {
    check_keys(j, where, {"kind", "variant"});
    spec.kind = envs::EnvKind::kLowerBound;
    if (j.contains("variant")) {
      const std::string v = as_string(j.at("variant"), where + ".variant");
      if (v == "random") {
        spec.variant = envs::LowerBoundEnv::Variant::kRandom;
      } else if (v == "E1") {
        spec.variant = envs::LowerBoundEnv::Variant::kE1;
      } else if (v == "E2") {
        spec.variant = envs::LowerBoundEnv::Variant::kE2;
      } else {
        config_error(where + ".variant", "expected random, E1 or E2");
      }
    }
  } else {
    config_error(where + ".kind", "unknown environment kind '" + kind + "'");
  }
  return spec;
}

bases::BaseKind parse_base_kind(const std::string& kind, const std::string& where) {
  using bases::BaseKind;
  if (kind == "exp3") return BaseKind::kExp3;
  if (kind == "exp4") return BaseKind::kExp4;
  if (kind == "epoch_greedy") return BaseKind::kEpochGreedy;
  if (kind == "thompson") return BaseKind::kThompsonSampling;
  if (kind == "ucb1") return BaseKind::kUcb1;
  if (kind == "pathological") return BaseKind::kPathological;
  config_error(where, "unknown base kind '" + kind + "'");
}

BaseSpec parse_base(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "name", "arms", "policies", "prior", "rho", "side", "range_aware",
                        "observe_unselected", "regret_bound"});
  BaseSpec spec;
  spec.kind = parse_base_kind(as_string(require(j, where, "kind"), where + ".kind"), where + ".kind");
  spec.name = j.contains("name") ? as_string(j.at("name"), where + ".name") : to_string(spec.kind);
  if (j.contains("arms")) spec.arms = as_count(j.at("arms"), where + ".arms");
  if (j.contains("policies")) spec.policies = as_policies(j.at("policies"), where + ".policies");
  if (j.contains("prior")) {
    for (const auto& row : as_matrix(j.at("prior"), where + ".prior")) {
      if (row.size() != 2) config_error(where + ".prior", "each arm needs [one_loss, zero_loss]");
      spec.prior.push_back({row[0], row[1]});
    }
  }
  if (j.contains("rho")) spec.rho = as_number(j.at("rho"), where + ".rho");
  if (j.contains("side")) {
    const std::size_t side = as_count(j.at("side"), where + ".side");
    if (side > 1) config_error(where + ".side", "expected 0 or 1");
    spec.side = static_cast<int>(side);
  }
  if (j.contains("range_aware")) spec.range_aware = as_bool(j.at("range_aware"), where + ".range_aware");
  if (j.contains("observe_unselected")) {
    spec.observe_unselected = as_bool(j.at("observe_unselected"), where + ".observe_unselected");
  }
  if (j.contains("regret_bound")) spec.regret_bound = as_number(j.at("regret_bound"), where + ".regret_bound");
  if (spec.kind == bases::BaseKind::kThompsonSampling && spec.prior.empty()) {
    config_error(where, "thompson needs a prior");
  }
  return spec;
}

MasterSpec parse_master(const json& j) {
  const std::string where = "master";
  check_keys(j, where, {"eta", "restart", "estimator", "naive_eta"});
  MasterSpec spec;
  if (j.contains("eta")) {
    const json& eta = j.at("eta");
    if (eta.is_number()) {
      spec.eta = eta.get<double>();
    } else if (eta.is_string()) {
      const std::string text = eta.get<std::string>();
      if (text == "tuned") {
        spec.tuned = true;
      } else if (text.rfind("tuned:", 0) == 0) {
        spec.tuned = true;
        try {
          std::size_t used = 0;
          spec.tuned_regret = std::stod(text.substr(6), &used);
          if (used != text.size() - 6) throw std::invalid_argument(text);
        } catch (const std::exception&) {
          config_error(where + ".eta", "cannot parse '" + text + "'");
        }
      } else {
        config_error(where + ".eta", "expected a number, \"tuned\" or \"tuned:<R>\"");
      }
    } else {
      config_error(where + ".eta", "expected a number or string");
    }
  }
  if (j.contains("restart")) {
    const std::string r = as_string(j.at("restart"), where + ".restart");
    if (r == "restart-on-doubling") {
      spec.restart = master::RestartPolicy::kRestartOnDoubling;
    } else if (r == "never-restart") {
      spec.restart = master::RestartPolicy::kNeverRestart;
    } else {
      config_error(where + ".restart", "expected restart-on-doubling or never-restart");
    }
  }
  if (j.contains("estimator")) {
    const std::string e = as_string(j.at("estimator"), where + ".estimator");
    if (e == "standard") {
      spec.estimator = master::Estimator::kStandard;
    } else if (e == "shared") {
      spec.estimator = master::Estimator::kShared;
    } else {
      config_error(where + ".estimator", "expected standard or shared");
    }
  }
  if (j.contains("naive_eta")) spec.naive_eta = as_number(j.at("naive_eta"), where + ".naive_eta");
  return spec;
}

}  // namespace

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kCorralRun: return "corral-run";
    case Scenario::kStandaloneRun: return "standalone-run";
    case Scenario::kStabilityTest: return "stability-test";
    case Scenario::kLowerBoundDemo: return "lowerbound-demo";
    case Scenario::kSweep: return "sweep";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& text) {
  for (Scenario s : {Scenario::kCorralRun, Scenario::kStandaloneRun, Scenario::kStabilityTest,
                     Scenario::kLowerBoundDemo, Scenario::kSweep}) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorKind::kConfig, "unknown scenario '" + text + "'");
}

std::size_t EnvironmentSpec::num_arms() const {
  switch (kind) {
    case envs::EnvKind::kStochasticMab: return means.size();
    case envs::EnvKind::kAdversarialMab: return script.empty() ? 0 : script.front().size();
    case envs::EnvKind::kStochasticContextual: return cond_means.empty() ? 0 : cond_means.front().size();
    case envs::EnvKind::kLowerBound: return 4;
    case envs::EnvKind::kInduced: break;
  }
  return 0;
}

std::size_t EnvironmentSpec::num_contexts() const {
  return kind == envs::EnvKind::kStochasticContextual ? context_probs.size() : 1;
}

ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir) {
  check_keys(doc, "config", {"scenario", "name", "environment", "bases", "master", "horizon", "seeds",
                             "output", "rho_levels", "sweep", "write_rounds", "report_prior_entropy"});
  ExperimentConfig cfg;
  if (doc.contains("scenario")) cfg.scenario = parse_scenario(as_string(doc.at("scenario"), "scenario"));
  if (doc.contains("name")) cfg.name = as_string(doc.at("name"), "name");
  if (doc.contains("environment")) cfg.environment = parse_environment(doc.at("environment"), base_dir);
  if (doc.contains("bases")) {
    const json& b = doc.at("bases");
    if (!b.is_array()) config_error("bases", "expected an array");
    for (std::size_t i = 0; i < b.size(); ++i) cfg.bases.push_back(parse_base(b[i], "bases[" + std::to_string(i) + "]"));
  }
  if (doc.contains("master")) cfg.master = parse_master(doc.at("master"));
  // A sweep supplies its own horizons; everything else needs one.
  if (doc.contains("horizon") || !doc.contains("sweep")) {
    cfg.horizon = as_count(require(doc, "config", "horizon"), "horizon");
  }
  const json& seeds = require(doc, "config", "seeds");
  if (!seeds.is_array()) config_error("seeds", "expected an array of integers");
  for (const auto& s : seeds) cfg.seeds.push_back(as_count(s, "seeds"));
  if (doc.contains("output")) cfg.output = as_string(doc.at("output"), "output");
  if (doc.contains("rho_levels")) cfg.rho_levels = as_numbers(doc.at("rho_levels"), "rho_levels");
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, "sweep", {"scenario", "horizons"});
    if (s.contains("scenario")) cfg.sweep.scenario = parse_scenario(as_string(s.at("scenario"), "sweep.scenario"));
    const json& h = require(s, "sweep", "horizons");
    if (!h.is_array()) config_error("sweep.horizons", "expected an array of integers");
    for (const auto& v : h) cfg.sweep.horizons.push_back(as_count(v, "sweep.horizons"));
  }
  if (doc.contains("write_rounds")) cfg.write_rounds = as_bool(doc.at("write_rounds"), "write_rounds");
  if (doc.contains("report_prior_entropy")) {
    cfg.report_prior_entropy = as_bool(doc.at("report_prior_entropy"), "report_prior_entropy");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(doc, dir.empty() ? "." : dir.string());
}

void validate(const ExperimentConfig& cfg, Scenario scenario) {
  if (cfg.scenario && *cfg.scenario != scenario) {
    config_error("scenario", std::string("config is for ") + to_string(*cfg.scenario) + ", not " +
                                 to_string(scenario));
  }
  if (cfg.seeds.empty()) config_error("seeds", "at least one seed is required");
  if (scenario != Scenario::kSweep && cfg.horizon < 2) config_error("horizon", "must be at least 2");
  for (const auto& b : cfg.bases) {
    if (!(b.rho >= 1.0)) config_error("bases", "rho must be at least 1");
  }
  switch (scenario) {
    case Scenario::kCorralRun:
      if (cfg.bases.size() < 2) config_error("bases", "corral-run needs at least two bases");
      if (!cfg.master.eta && !cfg.master.tuned) config_error("master.eta", "corral-run needs a learning rate");
      break;
    case Scenario::kStandaloneRun:
      if (cfg.bases.size() != 1) config_error("bases", "standalone-run needs exactly one base");
      break;
    case Scenario::kStabilityTest:
      if (cfg.bases.size() != 1) config_error("bases", "stability-test needs exactly one base");
      if (cfg.rho_levels.size() < 2) config_error("rho_levels", "need at least two range levels");
      for (double r : cfg.rho_levels) {
        if (!(r >= 1.0)) config_error("rho_levels", "range levels must be at least 1");
      }
      break;
    case Scenario::kLowerBoundDemo:
      if (!cfg.master.eta && !cfg.master.tuned) config_error("master.eta", "lowerbound-demo needs a learning rate");
      break;
    case Scenario::kSweep:
      if (cfg.sweep.horizons.size() < 2) config_error("sweep.horizons", "need at least two horizons");
      if (cfg.sweep.scenario != Scenario::kCorralRun && cfg.sweep.scenario != Scenario::kStandaloneRun) {
        config_error("sweep.scenario", "only corral-run and standalone-run can be swept");
      }
      for (std::size_t h : cfg.sweep.horizons) {
        if (h < 2) config_error("sweep.horizons", "horizons must be at least 2");
      }
      {
        ExperimentConfig inner = cfg;
        inner.scenario.reset();
        inner.horizon = cfg.sweep.horizons.front();
        validate(inner, cfg.sweep.scenario);
      }
      break;
  }
  if (scenario != Scenario::kLowerBoundDemo && scenario != Scenario::kSweep &&
      cfg.environment.num_arms() == 0) {
    config_error("environment", "missing or empty environment");
  }
}

double master_eta(const ExperimentConfig& cfg, std::size_t horizon) {
  if (cfg.master.eta) return *cfg.master.eta;
  if (!cfg.master.tuned) throw Error(ErrorKind::kConfig, "no master learning rate configured");
  const std::size_t m = std::max<std::size_t>(cfg.bases.size(), 2);
  std::optional<double> r = cfg.master.tuned_regret;
  if (!r) {
    // Largest declared bound among the bases we want to compete with.
    for (const auto& b : cfg.bases) {
      if (b.regret_bound) r = std::max(r.value_or(0.0), *b.regret_bound);
    }
  }
  // Without any bound the R -> 0 limit applies and only sqrt(M/T) remains.
  if (!r) return std::sqrt(static_cast<double>(m) / static_cast<double>(horizon));
  return master::tuned_eta(*r, horizon, m);
}

}  // namespace corral::harness
