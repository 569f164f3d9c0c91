#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corral/core.hpp"
#include "corral/rng.hpp"

namespace corral::bases {

enum class BaseKind { kExp3, kExp4, kEpochGreedy, kThompsonSampling, kUcb1, kPathological };

const char* to_string(BaseKind kind);

/// Uniform contract every base bandit algorithm implements.
///
/// Each round the driver calls propose() exactly once and then update()
/// exactly once with the packet for that round. reset(rho) re-initializes
/// all learning state for a new loss range; the random stream continues.
class BaseAlgorithm {
 public:
  virtual ~BaseAlgorithm() = default;

  virtual BaseKind kind() const = 0;
  virtual DecisionId propose(ContextId context) = 0;
  virtual void update(const FeedbackPacket& packet) = 0;
  virtual void reset(double rho) = 0;

  virtual double range() const = 0;
  virtual std::size_t num_arms() const = 0;
  /// Comparator class used for per-base regret.
  virtual PolicyClass decision_space(std::size_t num_contexts) const = 0;
  virtual std::optional<StabilityCertificate> certificate() const = 0;
  virtual std::unique_ptr<BaseAlgorithm> clone() const = 0;
};

void check_range(double rho);

struct Exp3Options {
  /// When false the learner squeezes losses back into unit range by dividing
  /// by rho and keeps the unit-range rate, so its regret grows linearly in
  /// rho. Kept so the stability estimator can be shown to catch it.
  bool range_aware = true;
};

/// Exponential weights over arms on importance-weighted losses,
/// rate sqrt(ln K / (K T rho)).
class Exp3 final : public BaseAlgorithm {
 public:
  Exp3(std::size_t num_arms, std::size_t horizon, double rho, Rng rng, Exp3Options options = {});

  BaseKind kind() const override { return BaseKind::kExp3; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return num_arms_; }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override;
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<Exp3>(*this); }

  double rate() const noexcept { return rate_; }
  std::vector<double> distribution() const;
  const std::vector<double>& cumulative_losses() const noexcept { return cumulative_; }

  bool operator==(const Exp3&) const = default;

 private:
  std::size_t num_arms_;
  std::size_t horizon_;
  double rho_;
  Exp3Options options_;
  double rate_ = 0.0;
  std::vector<double> cumulative_;
  std::optional<DecisionId> last_arm_;
  double last_prob_ = 1.0;
  Rng rng_;
};

/// Exponential weights over a finite policy class; the action distribution
/// is the weight mixture of the policies' recommendations.
class Exp4 final : public BaseAlgorithm {
 public:
  Exp4(PolicyClass policies, std::size_t num_arms, std::size_t horizon, double rho, Rng rng);

  BaseKind kind() const override { return BaseKind::kExp4; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return num_arms_; }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override;
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<Exp4>(*this); }

  double rate() const noexcept { return rate_; }
  std::vector<double> policy_weights() const;
  std::vector<double> action_distribution(ContextId context) const;

  bool operator==(const Exp4&) const = default;

 private:
  PolicyClass policies_;
  std::size_t num_arms_;
  std::size_t horizon_;
  double rho_;
  double rate_ = 0.0;
  std::vector<double> cumulative_;
  std::optional<DecisionId> last_arm_;
  ContextId last_context_ = kNoContext;
  double last_prob_ = 1.0;
  Rng rng_;
};

/// One bandit-feedback training example: the importance-weighted loss of the
/// single action that was played.
struct WeightedSample {
  ContextId context;
  DecisionId arm;
  double weighted_loss;
  std::size_t round;

  double loss_for(DecisionId a) const { return a == arm ? weighted_loss : 0.0; }
  bool operator==(const WeightedSample&) const = default;
};

/// ceil(T^{2/3} rho^{1/3} sqrt(K ln(T |policies|))) clamped to [1, T].
std::size_t epoch_greedy_explore_rounds(std::size_t horizon, double rho, std::size_t num_arms,
                                        std::size_t num_policies);

/// Explore-first Epoch-Greedy: uniform actions for T0 selected rounds, then
/// the empirical risk minimizer over the policy class.
class EpochGreedy final : public BaseAlgorithm {
 public:
  EpochGreedy(PolicyClass policies, std::size_t num_arms, std::size_t horizon, double rho, Rng rng);

  BaseKind kind() const override { return BaseKind::kEpochGreedy; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return num_arms_; }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override;
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<EpochGreedy>(*this); }

  std::size_t explore_rounds() const noexcept { return explore_rounds_; }
  bool exploiting() const noexcept { return erm_.has_value(); }
  std::optional<std::size_t> erm_policy() const noexcept { return erm_; }
  const std::vector<WeightedSample>& samples() const noexcept { return samples_; }
  const PolicyClass& policies() const noexcept { return policies_; }

  bool operator==(const EpochGreedy&) const = default;

 private:
  void fit();

  PolicyClass policies_;
  std::size_t num_arms_;
  std::size_t num_contexts_;
  std::size_t horizon_;
  double rho_;
  std::size_t explore_rounds_ = 1;
  std::vector<WeightedSample> samples_;
  std::optional<std::size_t> erm_;
  std::size_t rounds_seen_ = 0;
  std::optional<DecisionId> last_arm_;
  ContextId last_context_ = kNoContext;
  bool last_explored_ = false;
  Rng rng_;
};

/// Beta pseudo-counts for one arm's Bernoulli loss.
struct BetaPrior {
  double one_loss = 1.0;
  double zero_loss = 1.0;
  bool operator==(const BetaPrior&) const = default;
};

/// Beta-Bernoulli Thompson sampling for losses. Only rounds on which it was
/// selected update the posterior.
class ThompsonSampling final : public BaseAlgorithm {
 public:
  ThompsonSampling(std::vector<BetaPrior> prior, double rho, Rng rng);

  BaseKind kind() const override { return BaseKind::kThompsonSampling; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return prior_.size(); }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override;
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<ThompsonSampling>(*this); }

  const std::vector<BetaPrior>& prior() const noexcept { return prior_; }
  const std::vector<std::size_t>& one_loss_counts() const noexcept { return ones_; }
  const std::vector<std::size_t>& zero_loss_counts() const noexcept { return zeros_; }

  bool operator==(const ThompsonSampling&) const = default;

 private:
  std::vector<BetaPrior> prior_;
  double rho_;
  std::vector<std::size_t> ones_;
  std::vector<std::size_t> zeros_;
  std::optional<DecisionId> last_arm_;
  Rng rng_;
};

/// UCB1 on losses with index clamp(mean - sqrt(2 ln t / n), 0, 1). Ties go to
/// the lower empirical mean, then the lower index. Uncertified.
class Ucb1 final : public BaseAlgorithm {
 public:
  explicit Ucb1(std::size_t num_arms, double rho = 1.0);

  BaseKind kind() const override { return BaseKind::kUcb1; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return num_arms_; }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override { return std::nullopt; }
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<Ucb1>(*this); }

  double index(DecisionId arm) const;
  const std::vector<std::size_t>& pulls() const noexcept { return pulls_; }

  bool operator==(const Ucb1&) const = default;

 private:
  std::size_t num_arms_;
  double rho_;
  std::vector<std::size_t> pulls_;
  std::vector<double> sums_;
  std::size_t total_ = 0;
  std::optional<DecisionId> last_arm_;
};

/// The four-action base used to show that some base algorithms cannot be
/// corralled. Side 0 plays arms {0,1}, side 1 plays arms {2,3}.
///
/// On its first observed loss: 0.1 or 0.3 locks it to its first arm, 0.2 or
/// 0.4 locks it to its second arm, anything else makes it uniform over its
/// pair forever. By default only selected rounds count as observations; with
/// observe_unselected an unselected round is read as an observed loss of 0.
class PathologicalBase final : public BaseAlgorithm {
 public:
  enum class Mode { kFresh, kLockFirst, kLockSecond, kUniform };

  PathologicalBase(int side, Rng rng, bool observe_unselected = false);

  BaseKind kind() const override { return BaseKind::kPathological; }
  DecisionId propose(ContextId context) override;
  void update(const FeedbackPacket& packet) override;
  void reset(double rho) override;
  double range() const override { return rho_; }
  std::size_t num_arms() const override { return 4; }
  PolicyClass decision_space(std::size_t num_contexts) const override;
  std::optional<StabilityCertificate> certificate() const override { return std::nullopt; }
  std::unique_ptr<BaseAlgorithm> clone() const override { return std::make_unique<PathologicalBase>(*this); }

  Mode mode() const noexcept { return mode_; }

  bool operator==(const PathologicalBase&) const = default;

 private:
  int side_;
  bool observe_unselected_;
  double rho_ = 1.0;
  Mode mode_ = Mode::kFresh;
  Rng rng_;
};

std::unique_ptr<BaseAlgorithm> exp3(std::size_t num_arms, std::size_t horizon, double rho, Rng rng);
std::unique_ptr<BaseAlgorithm> exp4(PolicyClass policies, std::size_t num_arms, std::size_t horizon,
                                    double rho, Rng rng);
std::unique_ptr<BaseAlgorithm> epoch_greedy(PolicyClass policies, std::size_t num_arms,
                                            std::size_t horizon, double rho, Rng rng);
std::unique_ptr<BaseAlgorithm> thompson_sampling(std::vector<BetaPrior> prior, double rho, Rng rng);
std::unique_ptr<BaseAlgorithm> ucb1(std::size_t num_arms);

/// B1 (arms 0,1) and B2 (arms 2,3) of the lower-bound construction.
std::pair<std::unique_ptr<BaseAlgorithm>, std::unique_ptr<BaseAlgorithm>> pathological_pair(
    Rng rng1, Rng rng2, bool observe_unselected = false);

}  // namespace corral::bases
