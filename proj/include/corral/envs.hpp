#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "corral/core.hpp"
#include "corral/rng.hpp"

namespace corral::envs {

enum class EnvKind { kStochasticMab, kAdversarialMab, kStochasticContextual, kLowerBound, kInduced };

const char* to_string(EnvKind kind);

/// Best fixed decision over a comparator class and its per-round loss:
/// expected loss for stochastic environments, realized loss for scripted ones.
struct RegretBaseline {
  std::size_t best_index;
  Policy best_policy;
  std::vector<double> per_round;

  double cumulative(std::size_t rounds) const;
};

/// Oblivious environment producing one (context, loss vector) pair per round.
///
/// next_round() advances and realizes the round; loss() and expected_loss()
/// then describe that round. commit() tells the environment which decision
/// was played.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  virtual std::size_t num_arms() const = 0;
  virtual std::size_t num_contexts() const { return 1; }

  virtual ContextId next_round() = 0;
  virtual double loss(DecisionId arm) const = 0;
  /// Conditional mean of loss(arm) given everything revealed so far.
  virtual double expected_loss(DecisionId arm) const = 0;
  virtual void commit(DecisionId) {}
  /// Packet a learner that played `arm` alone would receive.
  virtual FeedbackPacket feedback(DecisionId arm) const;

  virtual RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const = 0;
  /// Comparator class used when none is supplied.
  virtual PolicyClass default_policies() const;
};

class StochasticMab final : public Environment {
 public:
  StochasticMab(std::vector<double> means, Rng rng);

  EnvKind kind() const override { return EnvKind::kStochasticMab; }
  std::size_t num_arms() const override { return means_.size(); }
  ContextId next_round() override;
  double loss(DecisionId arm) const override { return losses_.at(arm); }
  double expected_loss(DecisionId arm) const override { return means_.at(arm); }
  RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const override;

  const std::vector<double>& means() const noexcept { return means_; }

 private:
  std::vector<double> means_;
  std::vector<double> losses_;
  Rng rng_;
};

class AdversarialMab final : public Environment {
 public:
  explicit AdversarialMab(std::vector<std::vector<double>> script);

  EnvKind kind() const override { return EnvKind::kAdversarialMab; }
  std::size_t num_arms() const override { return script_.front().size(); }
  ContextId next_round() override;
  double loss(DecisionId arm) const override;
  double expected_loss(DecisionId arm) const override { return loss(arm); }
  RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const override;

  std::size_t rows() const noexcept { return script_.size(); }

 private:
  std::vector<std::vector<double>> script_;
  std::size_t round_ = 0;
};

/// Reads a T x K loss script (comma separated decimals, one row per round).
std::vector<std::vector<double>> load_loss_script(const std::string& path);

/// i.i.d. contexts and Bernoulli losses with per-(context, arm) means.
class StochasticContextual final : public Environment {
 public:
  StochasticContextual(std::vector<double> context_probs, PolicyClass policies,
                       std::vector<std::vector<double>> cond_means, Rng rng);

  EnvKind kind() const override { return EnvKind::kStochasticContextual; }
  std::size_t num_arms() const override { return cond_means_.front().size(); }
  std::size_t num_contexts() const override { return context_probs_.size(); }
  ContextId next_round() override;
  double loss(DecisionId arm) const override { return losses_.at(arm); }
  double expected_loss(DecisionId arm) const override { return cond_means_[context_].at(arm); }
  RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const override;
  PolicyClass default_policies() const override { return policies_; }

  /// sum_x P(x) mean(x, policy(x)).
  double policy_value(const Policy& policy) const;

 private:
  std::vector<double> context_probs_;
  PolicyClass policies_;
  std::vector<std::vector<double>> cond_means_;
  ContextId context_ = kNoContext;
  std::vector<double> losses_;
  Rng rng_;
};

/// The two-environment, four-action instance behind the lower bound. In E1
/// arms {0,1} carry {0.1,0.2} and arms {2,3} carry {0.3,0.4}; E2 swaps the
/// pairs. The within-pair order is random.
class LowerBoundEnv final : public Environment {
 public:
  enum class Variant { kRandom, kE1, kE2 };

  explicit LowerBoundEnv(Rng rng, Variant variant = Variant::kRandom);

  EnvKind kind() const override { return EnvKind::kLowerBound; }
  std::size_t num_arms() const override { return 4; }
  ContextId next_round() override { return kNoContext; }
  double loss(DecisionId arm) const override { return losses_.at(arm); }
  double expected_loss(DecisionId arm) const override { return losses_.at(arm); }
  RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const override;

  bool is_e1() const noexcept { return e1_; }
  const std::array<double, 4>& losses() const noexcept { return losses_; }

 private:
  bool e1_ = true;
  std::array<double, 4> losses_{};
};

using ProbabilitySchedule = std::function<double(std::size_t round)>;

/// Environment seen by a learner that is only consulted with probability
/// p_t: selected rounds carry loss / p_t, the rest carry zero. The learner's
/// own decision is forwarded to the inner environment either way.
class InducedEnv final : public Environment {
 public:
  InducedEnv(std::unique_ptr<Environment> inner, ProbabilitySchedule schedule, Rng rng);

  EnvKind kind() const override { return EnvKind::kInduced; }
  std::size_t num_arms() const override { return inner_->num_arms(); }
  std::size_t num_contexts() const override { return inner_->num_contexts(); }
  ContextId next_round() override;
  double loss(DecisionId arm) const override;
  double expected_loss(DecisionId arm) const override { return inner_->expected_loss(arm); }
  void commit(DecisionId arm) override { inner_->commit(arm); }
  FeedbackPacket feedback(DecisionId arm) const override;
  RegretBaseline baseline(const PolicyClass& policies, std::size_t horizon) const override {
    return inner_->baseline(policies, horizon);
  }
  PolicyClass default_policies() const override { return inner_->default_policies(); }

  const Environment& inner() const noexcept { return *inner_; }
  double probability() const noexcept { return prob_; }
  bool selected() const noexcept { return selected_; }

 private:
  std::unique_ptr<Environment> inner_;
  ProbabilitySchedule schedule_;
  Rng rng_;
  std::size_t round_ = 0;
  double prob_ = 1.0;
  bool selected_ = true;
};

std::unique_ptr<Environment> stochastic_mab(std::vector<double> means, Rng rng);
std::unique_ptr<Environment> adversarial_mab(std::vector<std::vector<double>> script);
std::unique_ptr<Environment> stochastic_contextual(std::vector<double> context_probs,
                                                   PolicyClass policies,
                                                   std::vector<std::vector<double>> cond_means,
                                                   Rng rng);
std::unique_ptr<Environment> lower_bound_env(Rng rng,
                                             LowerBoundEnv::Variant variant = LowerBoundEnv::Variant::kRandom);
std::unique_ptr<Environment> induced_env(std::unique_ptr<Environment> inner,
                                         ProbabilitySchedule schedule, Rng rng);

}  // namespace corral::envs
