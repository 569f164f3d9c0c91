#include "corral/master.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace corral::master {

const char* to_string(RestartPolicy policy) {
  return policy == RestartPolicy::kRestartOnDoubling ? "restart-on-doubling" : "never-restart";
}

const char* to_string(Estimator estimator) {
  return estimator == Estimator::kStandard ? "standard" : "shared";
}

MasterState init_master(double eta0, std::size_t num_bases, std::size_t horizon,
                        RestartPolicy restart_policy) {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) {
    throw Error(ErrorKind::kConfig, "master learning rate must be positive");
  }
  if (num_bases < 2) throw Error(ErrorKind::kConfig, "CORRAL needs at least two bases");
  if (horizon < 2) throw Error(ErrorKind::kConfig, "horizon must be at least 2");

  const auto m = static_cast<double>(num_bases);
  const double t = static_cast<double>(horizon);
  return MasterState{
      .horizon = horizon,
      .num_bases = num_bases,
      .gamma = 1.0 / t,
      .beta = std::exp(1.0 / std::log(t)),
      .eta0 = eta0,
      .eta = omd::LearningRateVector::constant(num_bases, eta0),
      .rho = std::vector<double>(num_bases, 2.0 * m),
      .p = ProbVector::uniform(num_bases),
      .p_bar = ProbVector::uniform(num_bases),
      .round = 1,
      .restart_policy = restart_policy,
      .threshold_events = std::vector<std::size_t>(num_bases, 0),
  };
}

void check_invariants(const MasterState& s) {
  auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << "round " << s.round << ": " << what;
    throw Error(ErrorKind::kIntegrity, msg.str());
  };
  const double m = static_cast<double>(s.num_bases);
  const double t = static_cast<double>(s.horizon);
  const double log2_t = std::ceil(std::log2(t));
  for (std::size_t i = 0; i < s.num_bases; ++i) {
    const double mixed = (1.0 - s.gamma) * s.p[i] + s.gamma / m;
    if (std::abs(mixed - s.p_bar[i]) > kSimplexTolerance) fail("p_bar is not the gamma mixture of p");
    if (s.p_bar[i] < s.gamma / m * (1.0 - kSimplexTolerance)) fail("p_bar below gamma/M");
    if (s.rho[i] * s.p_bar[i] < 1.0) fail("rho no longer bounds 1/p_bar");
    if (s.rho[i] > 2.0 * t * m * (1.0 + kSimplexTolerance)) fail("rho above 2TM");
    if (static_cast<double>(s.threshold_events[i]) > log2_t) fail("too many threshold events");
    if (s.eta[i] / s.eta0 > 5.0) fail("learning rate grew beyond 5x");
  }
}

std::size_t sample_index(const ProbVector& dist, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    cumulative += dist[i];
    if (u < cumulative) return i;
  }
  return dist.size() - 1;
}

Choice choose(const MasterState& state, std::span<const DecisionId> proposals, Rng& rng) {
  if (proposals.size() != state.num_bases) {
    throw Error(ErrorKind::kContract, "expected one proposal per base");
  }
  if (state.round > state.horizon) throw Error(ErrorKind::kContract, "horizon exhausted");
  const std::size_t i = sample_index(state.p_bar, rng.uniform());
  return {i, proposals[i]};
}

std::vector<FeedbackPacket> build_packets(const ProbVector& p_bar,
                                          std::span<const DecisionId> proposals,
                                          std::size_t chosen, double observed,
                                          Estimator estimator) {
  check_loss(observed);
  if (proposals.size() != p_bar.size() || chosen >= p_bar.size()) {
    throw Error(ErrorKind::kContract, "proposal count or chosen index out of range");
  }
  std::vector<FeedbackPacket> packets(p_bar.size());
  if (estimator == Estimator::kStandard) {
    for (std::size_t j = 0; j < p_bar.size(); ++j) {
      packets[j] = importance_weight(observed, p_bar[j], j == chosen);
    }
    return packets;
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < p_bar.size(); ++j) {
    if (proposals[j] == proposals[chosen]) mass += p_bar[j];
  }
  mass = std::min(mass, 1.0);
  for (std::size_t j = 0; j < p_bar.size(); ++j) {
    const bool agrees = proposals[j] == proposals[chosen];
    packets[j] = importance_weight(observed, agrees ? mass : p_bar[j], agrees);
  }
  return packets;
}

std::vector<std::size_t> update_thresholds(MasterState& state) {
  std::vector<std::size_t> fired;
  for (std::size_t i = 0; i < state.num_bases; ++i) {
    const double inverse = 1.0 / state.p_bar[i];
    if (inverse > state.rho[i]) {
      state.rho[i] = 2.0 * inverse;
      state.eta.scale(i, state.beta);
      ++state.threshold_events[i];
      fired.push_back(i);
    }
  }
  return fired;
}

RoundOutcome feedback(MasterState& state, const Choice& choice, double observed_loss,
                      Estimator estimator, std::span<const DecisionId> proposals) {
  check_loss(observed_loss);
  if (proposals.size() != state.num_bases) {
    throw Error(ErrorKind::kContract, "expected one proposal per base");
  }
  RoundOutcome out{choice.chosen_base, choice.decision, {}, {}, {}};
  out.packets = build_packets(state.p_bar, proposals, choice.chosen_base, observed_loss, estimator);

  // The master always runs OMD on the one-hot standard estimate.
  std::vector<double> loss(state.num_bases, 0.0);
  loss[choice.chosen_base] = observed_loss / state.p_bar[choice.chosen_base];
  state.p = omd::omd_step(state.p, loss, state.eta);

  const double m = static_cast<double>(state.num_bases);
  std::vector<double> mixed(state.num_bases);
  for (std::size_t i = 0; i < state.num_bases; ++i) {
    mixed[i] = (1.0 - state.gamma) * state.p[i] + state.gamma / m;
  }
  state.p_bar = validate_simplex(std::move(mixed));

  out.threshold_events = update_thresholds(state);
  if (state.restart_policy == RestartPolicy::kRestartOnDoubling) out.restarts = out.threshold_events;
  ++state.round;
  return out;
}

double tuned_eta(double regret_target, std::size_t horizon, std::size_t num_bases) {
  if (!(regret_target > 0.0)) throw Error(ErrorKind::kConfig, "regret target must be positive");
  const double t = static_cast<double>(horizon);
  const double m = static_cast<double>(num_bases);
  return std::min(1.0 / (40.0 * regret_target * std::log(t)), std::sqrt(m / t));
}

NaiveExp3Master::NaiveExp3Master(std::size_t num_bases, std::size_t horizon, std::optional<double> rate)
    : rate_(rate.value_or(std::sqrt(std::log(static_cast<double>(num_bases)) /
                                    (static_cast<double>(num_bases) * static_cast<double>(horizon))))),
      cumulative_(num_bases, 0.0) {
  if (num_bases < 2) throw Error(ErrorKind::kConfig, "need at least two bases");
  if (horizon < 1) throw Error(ErrorKind::kConfig, "horizon must be positive");
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw Error(ErrorKind::kConfig, "naive rate must be positive");
}

std::vector<double> NaiveExp3Master::distribution() const {
  const double best = *std::min_element(cumulative_.begin(), cumulative_.end());
  std::vector<double> w(cumulative_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-rate_ * (cumulative_[i] - best));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

Choice NaiveExp3Master::choose(std::span<const DecisionId> proposals, Rng& rng) const {
  if (proposals.size() != cumulative_.size()) {
    throw Error(ErrorKind::kContract, "expected one proposal per base");
  }
  const auto dist = distribution();
  const double u = rng.uniform();
  double c = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    c += dist[i];
    if (u < c) return {i, proposals[i]};
  }
  return {dist.size() - 1, proposals.back()};
}

std::vector<FeedbackPacket> NaiveExp3Master::feedback(const Choice& choice, double observed_loss,
                                                      std::span<const DecisionId> proposals) {
  if (proposals.size() != cumulative_.size()) {
    throw Error(ErrorKind::kContract, "expected one proposal per base");
  }
  const auto dist = distribution();
  std::vector<FeedbackPacket> packets(dist.size());
  for (std::size_t j = 0; j < dist.size(); ++j) {
    // Distribution entries can underflow; clamp so the packet stays well formed.
    const double prob = std::clamp(dist[j], 1e-300, 1.0);
    packets[j] = importance_weight(observed_loss, prob, j == choice.chosen_base);
  }
  cumulative_[choice.chosen_base] += packets[choice.chosen_base].weighted_loss;
  return packets;
}

}  // namespace corral::master
