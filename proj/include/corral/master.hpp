#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "corral/core.hpp"
#include "corral/omd.hpp"
#include "corral/rng.hpp"

namespace corral::master {

enum class RestartPolicy { kRestartOnDoubling, kNeverRestart };
enum class Estimator { kStandard, kShared };

const char* to_string(RestartPolicy policy);
const char* to_string(Estimator estimator);

/// Full state of the CORRAL master.
///
/// p is the OMD iterate, p_bar the gamma-mixed sampling distribution,
/// eta the per-base learning rates and rho the running upper bounds on
/// 1/p_bar that double (and bump eta by beta) whenever they are exceeded.
struct MasterState {
  std::size_t horizon;
  std::size_t num_bases;
  double gamma;
  double beta;
  double eta0;
  omd::LearningRateVector eta;
  std::vector<double> rho;
  ProbVector p;
  ProbVector p_bar;
  std::size_t round = 1;
  RestartPolicy restart_policy;
  std::vector<std::size_t> threshold_events;

  bool operator==(const MasterState&) const = default;
};

MasterState init_master(double eta0, std::size_t num_bases, std::size_t horizon,
                        RestartPolicy restart_policy = RestartPolicy::kRestartOnDoubling);

/// Throws kIntegrity when any state invariant is broken.
void check_invariants(const MasterState& state);

/// Smallest index whose cumulative probability exceeds u.
std::size_t sample_index(const ProbVector& dist, double u);

struct Choice {
  std::size_t chosen_base;
  DecisionId decision;
};

Choice choose(const MasterState& state, std::span<const DecisionId> proposals, Rng& rng);

/// Per-base packets for one round. Standard: only the chosen base sees
/// observed / p_bar[chosen]. Shared: every base that proposed the played
/// decision sees observed / (sum of their p_bar).
std::vector<FeedbackPacket> build_packets(const ProbVector& p_bar,
                                          std::span<const DecisionId> proposals,
                                          std::size_t chosen, double observed,
                                          Estimator estimator);

struct RoundOutcome {
  std::size_t chosen_base;
  DecisionId decision;
  std::vector<FeedbackPacket> packets;
  std::vector<std::size_t> threshold_events;
  std::vector<std::size_t> restarts;
};

/// Checks every base's threshold against the current p_bar; doubles rho and
/// multiplies eta by beta where exceeded. Returns the indices that fired.
std::vector<std::size_t> update_thresholds(MasterState& state);

/// Routes the round's feedback and advances the state by one round.
RoundOutcome feedback(MasterState& state, const Choice& choice, double observed_loss,
                      Estimator estimator, std::span<const DecisionId> proposals);

/// min{1/(40 R ln T), sqrt(M/T)}.
double tuned_eta(double regret_target, std::size_t horizon, std::size_t num_bases);

/// Plain exponential weights over bases with importance-weighted losses and no
/// stabilizing schedule. Only used to demonstrate the lower bound.
class NaiveExp3Master {
 public:
  /// Rate defaults to sqrt(ln M / (M T)).
  NaiveExp3Master(std::size_t num_bases, std::size_t horizon, std::optional<double> rate = std::nullopt);

  std::vector<double> distribution() const;
  Choice choose(std::span<const DecisionId> proposals, Rng& rng) const;
  std::vector<FeedbackPacket> feedback(const Choice& choice, double observed_loss,
                                       std::span<const DecisionId> proposals);
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  std::vector<double> cumulative_;
};

}  // namespace corral::master
