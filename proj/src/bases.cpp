#include "corral/bases.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace corral::bases {
namespace {

DecisionId inverse_cdf(const std::vector<double>& dist, double u) {
  double c = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    c += dist[i];
    if (u < c) return i;
  }
  return dist.size() - 1;
}

std::vector<double> exponential_weights(const std::vector<double>& cumulative, double rate) {
  const double best = *std::min_element(cumulative.begin(), cumulative.end());
  std::vector<double> w(cumulative.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-rate * (cumulative[i] - best));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

void require_proposal(bool has_proposal) {
  if (!has_proposal) throw Error(ErrorKind::kContract, "update() called before propose()");
}

void check_packet(const FeedbackPacket& packet) {
  if (!(packet.sampling_prob > 0.0 && packet.sampling_prob <= 1.0)) {
    throw Error(ErrorKind::kInvalidProbability, "packet sampling probability outside (0,1]");
  }
  if (!(packet.weighted_loss >= 0.0) || !std::isfinite(packet.weighted_loss)) {
    throw Error(ErrorKind::kInvalidLoss, "packet loss must be finite and non-negative");
  }
}

// Raw loss recovered from a selected packet.
double recovered_loss(const FeedbackPacket& packet) {
  const double raw = packet.raw_loss ? *packet.raw_loss
                                     : packet.weighted_loss * packet.sampling_prob;
  return std::clamp(raw, 0.0, 1.0);
}

double log_count(std::size_t n) { return std::log(static_cast<double>(n)); }

}  // namespace

const char* to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::kExp3: return "exp3";
    case BaseKind::kExp4: return "exp4";
    case BaseKind::kEpochGreedy: return "epoch_greedy";
    case BaseKind::kThompsonSampling: return "thompson";
    case BaseKind::kUcb1: return "ucb1";
    case BaseKind::kPathological: return "pathological";
  }
  return "unknown";
}

void check_range(double rho) {
  if (!(rho >= 1.0) || !std::isfinite(rho)) {
    throw Error(ErrorKind::kConfig, "range parameter must be finite and at least 1");
  }
}

// ---------------------------------------------------------------------------
// EXP3

Exp3::Exp3(std::size_t num_arms, std::size_t horizon, double rho, Rng rng, Exp3Options options)
    : num_arms_(num_arms), horizon_(horizon), rho_(rho), options_(options), rng_(std::move(rng)) {
  if (num_arms_ < 2) throw Error(ErrorKind::kConfig, "EXP3 needs at least two arms");
  if (horizon_ < 1) throw Error(ErrorKind::kConfig, "horizon must be positive");
  reset(rho);
}

void Exp3::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  const double k = static_cast<double>(num_arms_);
  const double per_round = log_count(num_arms_) / (k * static_cast<double>(horizon_));
  rate_ = options_.range_aware ? std::sqrt(per_round / rho_) : std::sqrt(per_round) / rho_;
  cumulative_.assign(num_arms_, 0.0);
  last_arm_.reset();
  last_prob_ = 1.0;
}

std::vector<double> Exp3::distribution() const { return exponential_weights(cumulative_, rate_); }

DecisionId Exp3::propose(ContextId) {
  const auto dist = distribution();
  const DecisionId a = inverse_cdf(dist, rng_.uniform());
  last_arm_ = a;
  last_prob_ = dist[a];
  return a;
}

void Exp3::update(const FeedbackPacket& packet) {
  require_proposal(last_arm_.has_value());
  check_packet(packet);
  if (packet.selected) cumulative_[*last_arm_] += packet.weighted_loss / last_prob_;
  last_arm_.reset();
}

PolicyClass Exp3::decision_space(std::size_t num_contexts) const {
  return constant_policies(num_arms_, num_contexts);
}

std::optional<StabilityCertificate> Exp3::certificate() const {
  const double k = static_cast<double>(num_arms_);
  return StabilityCertificate(
      0.5, [k](double t) { return std::sqrt(k * t * std::log(k)); },
      EnvironmentClass::kAdversarialMab);
}

// ---------------------------------------------------------------------------
// EXP4

Exp4::Exp4(PolicyClass policies, std::size_t num_arms, std::size_t horizon, double rho, Rng rng)
    : policies_(std::move(policies)),
      num_arms_(num_arms),
      horizon_(horizon),
      rho_(rho),
      rng_(std::move(rng)) {
  if (policies_.size() < 2) throw Error(ErrorKind::kConfig, "EXP4 needs at least two policies");
  if (num_arms_ < 1) throw Error(ErrorKind::kConfig, "EXP4 needs at least one arm");
  check_policy_class(policies_, num_arms_, policies_.front().size());
  if (horizon_ < 1) throw Error(ErrorKind::kConfig, "horizon must be positive");
  reset(rho);
}

void Exp4::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  rate_ = std::sqrt(log_count(policies_.size()) /
                    (static_cast<double>(num_arms_) * static_cast<double>(horizon_) * rho_));
  cumulative_.assign(policies_.size(), 0.0);
  last_arm_.reset();
  last_context_ = kNoContext;
  last_prob_ = 1.0;
}

std::vector<double> Exp4::policy_weights() const { return exponential_weights(cumulative_, rate_); }

std::vector<double> Exp4::action_distribution(ContextId context) const {
  if (context >= policies_.front().size()) throw Error(ErrorKind::kContract, "context out of range");
  const auto q = policy_weights();
  std::vector<double> dist(num_arms_, 0.0);
  for (std::size_t k = 0; k < policies_.size(); ++k) dist[policies_[k][context]] += q[k];
  return dist;
}

DecisionId Exp4::propose(ContextId context) {
  const auto dist = action_distribution(context);
  const DecisionId a = inverse_cdf(dist, rng_.uniform());
  last_arm_ = a;
  last_context_ = context;
  last_prob_ = dist[a];
  return a;
}

void Exp4::update(const FeedbackPacket& packet) {
  require_proposal(last_arm_.has_value());
  check_packet(packet);
  if (packet.selected) {
    const double estimate = packet.weighted_loss / last_prob_;
    for (std::size_t k = 0; k < policies_.size(); ++k) {
      if (policies_[k][last_context_] == *last_arm_) cumulative_[k] += estimate;
    }
  }
  last_arm_.reset();
}

PolicyClass Exp4::decision_space(std::size_t num_contexts) const {
  if (num_contexts != policies_.front().size()) {
    throw Error(ErrorKind::kConfig, "EXP4 policy table does not match the context set");
  }
  return policies_;
}

std::optional<StabilityCertificate> Exp4::certificate() const {
  const double k = static_cast<double>(num_arms_);
  const double n = static_cast<double>(policies_.size());
  return StabilityCertificate(
      0.5, [k, n](double t) { return std::sqrt(k * t * std::log(n)); },
      EnvironmentClass::kAdversarialContextual);
}

// ---------------------------------------------------------------------------
// Epoch-Greedy

std::size_t epoch_greedy_explore_rounds(std::size_t horizon, double rho, std::size_t num_arms,
                                        std::size_t num_policies) {
  const double t = static_cast<double>(horizon);
  const double raw = std::pow(t, 2.0 / 3.0) * std::cbrt(rho) *
                     std::sqrt(static_cast<double>(num_arms) *
                               std::log(t * static_cast<double>(num_policies)));
  const double rounded = std::ceil(raw);
  if (!(rounded >= 1.0)) return 1;
  if (rounded >= t) return horizon;
  return static_cast<std::size_t>(rounded);
}

EpochGreedy::EpochGreedy(PolicyClass policies, std::size_t num_arms, std::size_t horizon,
                         double rho, Rng rng)
    : policies_(std::move(policies)),
      num_arms_(num_arms),
      num_contexts_(0),
      horizon_(horizon),
      rho_(rho),
      rng_(std::move(rng)) {
  if (policies_.size() < 2) throw Error(ErrorKind::kConfig, "Epoch-Greedy needs at least two policies");
  num_contexts_ = policies_.front().size();
  check_policy_class(policies_, num_arms_, num_contexts_);
  if (horizon_ < 1) throw Error(ErrorKind::kConfig, "horizon must be positive");
  reset(rho);
}

void EpochGreedy::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  explore_rounds_ = epoch_greedy_explore_rounds(horizon_, rho_, num_arms_, policies_.size());
  samples_.clear();
  erm_.reset();
  rounds_seen_ = 0;
  last_arm_.reset();
  last_context_ = kNoContext;
  last_explored_ = false;
}

DecisionId EpochGreedy::propose(ContextId context) {
  if (context >= num_contexts_) throw Error(ErrorKind::kContract, "context out of range");
  last_context_ = context;
  last_explored_ = !erm_.has_value();
  last_arm_ = last_explored_ ? rng_.uniform_index(num_arms_) : policies_[*erm_][context];
  return *last_arm_;
}

void EpochGreedy::update(const FeedbackPacket& packet) {
  require_proposal(last_arm_.has_value());
  check_packet(packet);
  ++rounds_seen_;
  if (packet.selected && last_explored_ && !erm_) {
    // Both the master's probability and our own uniform 1/K.
    samples_.push_back({last_context_, *last_arm_,
                        packet.weighted_loss * static_cast<double>(num_arms_), rounds_seen_});
    if (samples_.size() >= explore_rounds_) fit();
  }
  last_arm_.reset();
}

void EpochGreedy::fit() {
  std::vector<std::vector<double>> table(num_contexts_, std::vector<double>(num_arms_, 0.0));
  for (const auto& s : samples_) table[s.context][s.arm] += s.weighted_loss;
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < policies_.size(); ++k) {
    double loss = 0.0;
    for (ContextId x = 0; x < num_contexts_; ++x) loss += table[x][policies_[k][x]];
    if (loss < best_loss) {
      best_loss = loss;
      best = k;
    }
  }
  erm_ = best;
}

PolicyClass EpochGreedy::decision_space(std::size_t num_contexts) const {
  if (num_contexts != num_contexts_) {
    throw Error(ErrorKind::kConfig, "Epoch-Greedy policy table does not match the context set");
  }
  return policies_;
}

std::optional<StabilityCertificate> EpochGreedy::certificate() const {
  const double k = static_cast<double>(num_arms_);
  const double n = static_cast<double>(policies_.size());
  return StabilityCertificate(
      1.0 / 3.0,
      [k, n](double t) { return std::pow(t, 2.0 / 3.0) * std::sqrt(k * std::log(t * n)); },
      EnvironmentClass::kStochasticContextual);
}

// ---------------------------------------------------------------------------
// Thompson sampling

ThompsonSampling::ThompsonSampling(std::vector<BetaPrior> prior, double rho, Rng rng)
    : prior_(std::move(prior)), rho_(rho), rng_(std::move(rng)) {
  if (prior_.size() < 2) throw Error(ErrorKind::kConfig, "Thompson sampling needs at least two arms");
  for (const auto& b : prior_) {
    if (!(b.one_loss > 0.0) || !(b.zero_loss > 0.0)) {
      throw Error(ErrorKind::kConfig, "Beta prior parameters must be positive");
    }
  }
  reset(rho);
}

void ThompsonSampling::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  ones_.assign(prior_.size(), 0);
  zeros_.assign(prior_.size(), 0);
  last_arm_.reset();
}

DecisionId ThompsonSampling::propose(ContextId) {
  DecisionId best = 0;
  double best_draw = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < prior_.size(); ++a) {
    const double draw = rng_.beta(prior_[a].one_loss + static_cast<double>(ones_[a]),
                                  prior_[a].zero_loss + static_cast<double>(zeros_[a]));
    if (draw < best_draw) {
      best_draw = draw;
      best = a;
    }
  }
  last_arm_ = best;
  return best;
}

void ThompsonSampling::update(const FeedbackPacket& packet) {
  require_proposal(last_arm_.has_value());
  check_packet(packet);
  if (packet.selected) {
    // Bernoulli trick keeps the conjugate update for fractional losses.
    if (rng_.uniform() < recovered_loss(packet)) {
      ++ones_[*last_arm_];
    } else {
      ++zeros_[*last_arm_];
    }
  }
  last_arm_.reset();
}

PolicyClass ThompsonSampling::decision_space(std::size_t num_contexts) const {
  return constant_policies(prior_.size(), num_contexts);
}

std::optional<StabilityCertificate> ThompsonSampling::certificate() const {
  // The prior entropy H(q) is at most ln K.
  const double k = static_cast<double>(prior_.size());
  return StabilityCertificate(
      0.5, [k](double t) { return std::sqrt(t * k * std::log(k)); },
      EnvironmentClass::kStochasticMab);
}

// ---------------------------------------------------------------------------
// UCB1

Ucb1::Ucb1(std::size_t num_arms, double rho) : num_arms_(num_arms), rho_(rho) {
  if (num_arms_ < 2) throw Error(ErrorKind::kConfig, "UCB1 needs at least two arms");
  reset(rho);
}

void Ucb1::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  pulls_.assign(num_arms_, 0);
  sums_.assign(num_arms_, 0.0);
  total_ = 0;
  last_arm_.reset();
}

double Ucb1::index(DecisionId arm) const {
  if (pulls_[arm] == 0) return 0.0;
  const double n = static_cast<double>(pulls_[arm]);
  const double bonus = std::sqrt(2.0 * std::log(static_cast<double>(total_)) / n);
  return std::clamp(sums_[arm] / n - bonus, 0.0, 1.0);
}

DecisionId Ucb1::propose(ContextId) {
  for (DecisionId a = 0; a < num_arms_; ++a) {
    if (pulls_[a] == 0) {
      last_arm_ = a;
      return a;
    }
  }
  DecisionId best = 0;
  for (DecisionId a = 1; a < num_arms_; ++a) {
    const double ia = index(a);
    const double ib = index(best);
    if (ia < ib) {
      best = a;
    } else if (ia == ib && sums_[a] / static_cast<double>(pulls_[a]) <
                               sums_[best] / static_cast<double>(pulls_[best])) {
      best = a;
    }
  }
  last_arm_ = best;
  return best;
}

void Ucb1::update(const FeedbackPacket& packet) {
  require_proposal(last_arm_.has_value());
  check_packet(packet);
  if (packet.selected) {
    sums_[*last_arm_] += recovered_loss(packet);
    ++pulls_[*last_arm_];
    ++total_;
  }
  last_arm_.reset();
}

PolicyClass Ucb1::decision_space(std::size_t num_contexts) const {
  return constant_policies(num_arms_, num_contexts);
}

// ---------------------------------------------------------------------------
// Lower-bound construction

PathologicalBase::PathologicalBase(int side, Rng rng, bool observe_unselected)
    : side_(side), observe_unselected_(observe_unselected), rng_(std::move(rng)) {
  if (side_ != 0 && side_ != 1) throw Error(ErrorKind::kConfig, "pathological side must be 0 or 1");
}

DecisionId PathologicalBase::propose(ContextId) {
  const DecisionId first = side_ == 0 ? 0 : 2;
  switch (mode_) {
    case Mode::kFresh:
    case Mode::kLockFirst: return first;
    case Mode::kLockSecond: return first + 1;
    case Mode::kUniform: return first + rng_.uniform_index(2);
  }
  return first;
}

void PathologicalBase::update(const FeedbackPacket& packet) {
  check_packet(packet);
  if (mode_ != Mode::kFresh) return;
  if (!packet.selected && !observe_unselected_) return;

  const double seen = packet.weighted_loss;
  auto is = [seen](double v) { return std::abs(seen - v) <= 1e-12; };
  if (is(0.1) || is(0.3)) {
    mode_ = Mode::kLockFirst;
  } else if (is(0.2) || is(0.4)) {
    mode_ = Mode::kLockSecond;
  } else {
    mode_ = Mode::kUniform;
  }
}

void PathologicalBase::reset(double rho) {
  check_range(rho);
  rho_ = rho;
  mode_ = Mode::kFresh;
}

PolicyClass PathologicalBase::decision_space(std::size_t num_contexts) const {
  return constant_policies(4, num_contexts);
}

// ---------------------------------------------------------------------------

std::unique_ptr<BaseAlgorithm> exp3(std::size_t num_arms, std::size_t horizon, double rho, Rng rng) {
  return std::make_unique<Exp3>(num_arms, horizon, rho, std::move(rng));
}

std::unique_ptr<BaseAlgorithm> exp4(PolicyClass policies, std::size_t num_arms, std::size_t horizon,
                                    double rho, Rng rng) {
  return std::make_unique<Exp4>(std::move(policies), num_arms, horizon, rho, std::move(rng));
}

std::unique_ptr<BaseAlgorithm> epoch_greedy(PolicyClass policies, std::size_t num_arms,
                                            std::size_t horizon, double rho, Rng rng) {
  return std::make_unique<EpochGreedy>(std::move(policies), num_arms, horizon, rho, std::move(rng));
}

std::unique_ptr<BaseAlgorithm> thompson_sampling(std::vector<BetaPrior> prior, double rho, Rng rng) {
  return std::make_unique<ThompsonSampling>(std::move(prior), rho, std::move(rng));
}

std::unique_ptr<BaseAlgorithm> ucb1(std::size_t num_arms) { return std::make_unique<Ucb1>(num_arms); }

std::pair<std::unique_ptr<BaseAlgorithm>, std::unique_ptr<BaseAlgorithm>> pathological_pair(
    Rng rng1, Rng rng2, bool observe_unselected) {
  return {std::make_unique<PathologicalBase>(0, std::move(rng1), observe_unselected),
          std::make_unique<PathologicalBase>(1, std::move(rng2), observe_unselected)};
}

}  // namespace corral::bases
