#include "corral/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace corral::envs {
namespace {

void check_mean(double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorKind::kConfig, "loss mean outside [0,1]");
}

// argmin over policies of value(policy), ties to the lowest index.
template <typename Value>
std::size_t best_policy(const PolicyClass& policies, Value value) {
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const double v = value(policies[k]);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

}  // namespace

const char* to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kStochasticMab: return "stochastic_mab";
    case EnvKind::kAdversarialMab: return "adversarial_mab";
    case EnvKind::kStochasticContextual: return "stochastic_contextual";
    case EnvKind::kLowerBound: return "lower_bound";
    case EnvKind::kInduced: return "induced";
  }
  return "unknown";
}

double RegretBaseline::cumulative(std::size_t rounds) const {
  if (rounds > per_round.size()) throw Error(ErrorKind::kIntegrity, "baseline shorter than run");
  return std::accumulate(per_round.begin(), per_round.begin() + static_cast<long>(rounds), 0.0);
}

FeedbackPacket Environment::feedback(DecisionId arm) const {
  return importance_weight(loss(arm), 1.0, true);
}

PolicyClass Environment::default_policies() const {
  return constant_policies(num_arms(), num_contexts());
}

// ---------------------------------------------------------------------------

StochasticMab::StochasticMab(std::vector<double> means, Rng rng)
    : means_(std::move(means)), losses_(means_.size(), 0.0), rng_(std::move(rng)) {
  if (means_.empty()) throw Error(ErrorKind::kConfig, "no arms");
  std::for_each(means_.begin(), means_.end(), check_mean);
}

ContextId StochasticMab::next_round() {
  for (std::size_t a = 0; a < means_.size(); ++a) losses_[a] = rng_.bernoulli(means_[a]) ? 1.0 : 0.0;
  return kNoContext;
}

RegretBaseline StochasticMab::baseline(const PolicyClass& policies, std::size_t horizon) const {
  check_policy_class(policies, num_arms(), 1);
  const std::size_t k = best_policy(policies, [&](const Policy& p) { return means_[p[0]]; });
  return {k, policies[k], std::vector<double>(horizon, means_[policies[k][0]])};
}

// ---------------------------------------------------------------------------

AdversarialMab::AdversarialMab(std::vector<std::vector<double>> script) : script_(std::move(script)) {
  if (script_.empty() || script_.front().empty()) throw Error(ErrorKind::kConfig, "empty loss script");
  const std::size_t k = script_.front().size();
  for (const auto& row : script_) {
    if (row.size() != k) throw Error(ErrorKind::kConfig, "loss script rows differ in length");
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kConfig, "scripted loss outside [0,1]");
    }
  }
}

ContextId AdversarialMab::next_round() {
  if (round_ >= script_.size()) throw Error(ErrorKind::kContract, "loss script exhausted");
  ++round_;
  return kNoContext;
}

double AdversarialMab::loss(DecisionId arm) const {
  if (round_ == 0) throw Error(ErrorKind::kContract, "loss() before next_round()");
  return script_[round_ - 1].at(arm);
}

RegretBaseline AdversarialMab::baseline(const PolicyClass& policies, std::size_t horizon) const {
  if (horizon > script_.size()) {
    throw Error(ErrorKind::kConfig, "horizon " + std::to_string(horizon) + " exceeds the " +
                                        std::to_string(script_.size()) + "-row loss script");
  }
  check_policy_class(policies, num_arms(), 1);
  std::vector<double> totals(num_arms(), 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t a = 0; a < totals.size(); ++a) totals[a] += script_[t][a];
  }
  const std::size_t k = best_policy(policies, [&](const Policy& p) { return totals[p[0]]; });
  std::vector<double> per_round(horizon);
  for (std::size_t t = 0; t < horizon; ++t) per_round[t] = script_[t][policies[k][0]];
  return {k, policies[k], std::move(per_round)};
}

std::vector<std::vector<double>> load_loss_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open loss script " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kConfig,
                    path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

StochasticContextual::StochasticContextual(std::vector<double> context_probs, PolicyClass policies,
                                           std::vector<std::vector<double>> cond_means, Rng rng)
    : context_probs_(std::move(context_probs)),
      policies_(std::move(policies)),
      cond_means_(std::move(cond_means)),
      rng_(std::move(rng)) {
  if (context_probs_.empty()) throw Error(ErrorKind::kConfig, "empty context distribution");
  for (double p : context_probs_) {
    if (!(p >= 0.0)) throw Error(ErrorKind::kConfig, "negative context probability");
  }
  const double total = std::accumulate(context_probs_.begin(), context_probs_.end(), 0.0);
  if (std::abs(total - 1.0) > kSimplexHardFail) {
    throw Error(ErrorKind::kConfig, "context probabilities do not sum to 1");
  }
  if (cond_means_.size() != context_probs_.size() || cond_means_.front().empty()) {
    throw Error(ErrorKind::kConfig, "conditional means must have one row per context");
  }
  for (const auto& row : cond_means_) {
    if (row.size() != cond_means_.front().size()) {
      throw Error(ErrorKind::kConfig, "conditional mean rows differ in length");
    }
    std::for_each(row.begin(), row.end(), check_mean);
  }
  if (policies_.empty()) policies_ = constant_policies(num_arms(), num_contexts());
  check_policy_class(policies_, num_arms(), num_contexts());
  losses_.assign(num_arms(), 0.0);
}

ContextId StochasticContextual::next_round() {
  const double u = rng_.uniform();
  double c = 0.0;
  context_ = context_probs_.size() - 1;
  for (std::size_t x = 0; x < context_probs_.size(); ++x) {
    c += context_probs_[x];
    if (u < c) {
      context_ = x;
      break;
    }
  }
  for (std::size_t a = 0; a < losses_.size(); ++a) {
    losses_[a] = rng_.bernoulli(cond_means_[context_][a]) ? 1.0 : 0.0;
  }
  return context_;
}

double StochasticContextual::policy_value(const Policy& policy) const {
  double v = 0.0;
  for (std::size_t x = 0; x < context_probs_.size(); ++x) v += context_probs_[x] * cond_means_[x][policy[x]];
  return v;
}

RegretBaseline StochasticContextual::baseline(const PolicyClass& policies, std::size_t horizon) const {
  check_policy_class(policies, num_arms(), num_contexts());
  const std::size_t k = best_policy(policies, [&](const Policy& p) { return policy_value(p); });
  return {k, policies[k], std::vector<double>(horizon, policy_value(policies[k]))};
}

// ---------------------------------------------------------------------------

LowerBoundEnv::LowerBoundEnv(Rng rng, Variant variant) {
  // Every draw happens up front; losses are constant from the first round on.
  switch (variant) {
    case Variant::kRandom: e1_ = rng.uniform() < 0.5; break;
    case Variant::kE1: e1_ = true; break;
    case Variant::kE2: e1_ = false; break;
  }
  const bool swap_low = rng.uniform() < 0.5;
  const bool swap_high = rng.uniform() < 0.5;
  const double low_a = swap_low ? 0.2 : 0.1;
  const double low_b = swap_low ? 0.1 : 0.2;
  const double high_a = swap_high ? 0.4 : 0.3;
  const double high_b = swap_high ? 0.3 : 0.4;
  if (e1_) {
    losses_ = {low_a, low_b, high_a, high_b};
  } else {
    losses_ = {high_a, high_b, low_a, low_b};
  }
}

RegretBaseline LowerBoundEnv::baseline(const PolicyClass& policies, std::size_t horizon) const {
  check_policy_class(policies, num_arms(), 1);
  const std::size_t k = best_policy(policies, [&](const Policy& p) { return losses_[p[0]]; });
  return {k, policies[k], std::vector<double>(horizon, losses_[policies[k][0]])};
}

// ---------------------------------------------------------------------------

InducedEnv::InducedEnv(std::unique_ptr<Environment> inner, ProbabilitySchedule schedule, Rng rng)
    : inner_(std::move(inner)), schedule_(std::move(schedule)), rng_(std::move(rng)) {
  if (!inner_) throw Error(ErrorKind::kConfig, "induced environment needs an inner environment");
  if (!schedule_) throw Error(ErrorKind::kConfig, "induced environment needs a probability schedule");
}

ContextId InducedEnv::next_round() {
  ++round_;
  const double p = schedule_(round_);
  if (!(p > 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << "schedule produced p=" << p << " at round " << round_ << ", expected (0,1]";
    throw Error(ErrorKind::kConfig, msg.str());
  }
  prob_ = p;
  selected_ = rng_.bernoulli(p);
  return inner_->next_round();
}

double InducedEnv::loss(DecisionId arm) const {
  return selected_ ? inner_->loss(arm) / prob_ : 0.0;
}

FeedbackPacket InducedEnv::feedback(DecisionId arm) const {
  return importance_weight(inner_->loss(arm), prob_, selected_);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> stochastic_mab(std::vector<double> means, Rng rng) {
  return std::make_unique<StochasticMab>(std::move(means), std::move(rng));
}

std::unique_ptr<Environment> adversarial_mab(std::vector<std::vector<double>> script) {
  return std::make_unique<AdversarialMab>(std::move(script));
}

std::unique_ptr<Environment> stochastic_contextual(std::vector<double> context_probs,
                                                   PolicyClass policies,
                                                   std::vector<std::vector<double>> cond_means,
                                                   Rng rng) {
  return std::make_unique<StochasticContextual>(std::move(context_probs), std::move(policies),
                                                std::move(cond_means), std::move(rng));
}

std::unique_ptr<Environment> lower_bound_env(Rng rng, LowerBoundEnv::Variant variant) {
  return std::make_unique<LowerBoundEnv>(std::move(rng), variant);
}

std::unique_ptr<Environment> induced_env(std::unique_ptr<Environment> inner,
                                         ProbabilitySchedule schedule, Rng rng) {
  return std::make_unique<InducedEnv>(std::move(inner), std::move(schedule), std::move(rng));
}

}  // namespace corral::envs
