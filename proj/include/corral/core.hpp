#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace corral {

enum class ErrorKind {
  kInvalidProbability,
  kInvalidLoss,
  kDegenerateDistribution,
  kNormalizationDrift,
  kSolverNonconvergence,
  kConfig,
  kContract,
  kIntegrity,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Index of an arm inside a finite action set.
using DecisionId = std::size_t;

/// Index into an environment's finite context set. Context-free
/// environments always emit kNoContext.
using ContextId = std::size_t;
inline constexpr ContextId kNoContext = 0;

/// A deterministic policy stored as an explicit context -> arm table.
using Policy = std::vector<DecisionId>;
using PolicyClass = std::vector<Policy>;

/// One constant policy per arm; the decision space of a multi-armed bandit.
PolicyClass constant_policies(std::size_t num_arms, std::size_t num_contexts = 1);

/// Throws kConfig unless every policy covers `num_contexts` and maps into [0, num_arms).
void check_policy_class(const PolicyClass& policies, std::size_t num_arms,
                        std::size_t num_contexts);

/// Deduplicated union, preserving first-seen order.
PolicyClass policy_union(const std::vector<PolicyClass>& classes);

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kSimplexHardFail = 1e-6;

/// A strictly positive point on the probability simplex.
class ProbVector {
 public:
  /// Validates and renormalizes; see validate_simplex.
  explicit ProbVector(std::vector<double> entries);

  static ProbVector uniform(std::size_t size);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  bool operator==(const ProbVector&) const = default;

 private:
  struct Trusted {};
  ProbVector(Trusted, std::vector<double> entries) : entries_(std::move(entries)) {}
  friend ProbVector validate_simplex(std::vector<double> entries);

  std::vector<double> entries_;
};

/// Rejects zero/negative entries and drift above 1e-6; otherwise returns the
/// vector rescaled to sum to one.
ProbVector validate_simplex(std::vector<double> entries);

/// What a base algorithm receives at the end of every round.
struct FeedbackPacket {
  bool selected = false;
  double weighted_loss = 0.0;
  double sampling_prob = 1.0;
  std::optional<double> raw_loss;

  bool operator==(const FeedbackPacket&) const = default;
};

/// Importance-weighted feedback: raw/prob when selected, zero otherwise.
FeedbackPacket importance_weight(double raw, double prob, bool selected);

// Throw kInvalidLoss / kInvalidProbability.
void check_loss(double raw);
void check_probability(double prob);

enum class EnvironmentClass {
  kStochasticMab,
  kAdversarialMab,
  kStochasticContextual,
  kAdversarialContextual,
};

const char* to_string(EnvironmentClass cls);

/// (alpha, R)-stability claim attached to a base algorithm.
struct StabilityCertificate {
  double alpha;
  std::function<double(double)> regret_bound;
  EnvironmentClass environment_class;

  StabilityCertificate(double alpha, std::function<double(double)> regret_bound,
                       EnvironmentClass environment_class);

  /// Checks R(a) <= R(b) for every consecutive pair of the sorted horizons.
  bool regret_bound_nondecreasing(std::vector<double> horizons) const;
};

}  // namespace corral
