#pragma once

#include <span>
#include <vector>

#include "corral/core.hpp"

namespace corral::omd {

/// Per-coordinate step sizes of the log-barrier mirror map
/// psi(p) = -sum_i ln(p_i) / eta_i.
class LearningRateVector {
 public:
  explicit LearningRateVector(std::vector<double> rates);
  static LearningRateVector constant(std::size_t size, double rate);

  std::size_t size() const noexcept { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_[i]; }
  std::span<const double> rates() const noexcept { return rates_; }
  void scale(std::size_t i, double factor);

  bool operator==(const LearningRateVector&) const = default;

 private:
  std::vector<double> rates_;
};

struct LambdaBracket {
  double lo;
  double hi;
};

inline constexpr double kDefaultLambdaTolerance = 1e-12;
inline constexpr int kMaxBisectionIterations = 200;

/// F(lambda) = sum_i 1 / (1/p_i + eta_i (loss_i - lambda)); +infinity once any
/// denominator is non-positive.
double normalization_sum(const ProbVector& p, std::span<const double> loss,
                         const LearningRateVector& eta, double lambda);

LambdaBracket lambda_bracket(std::span<const double> loss);

/// Bisection for F(lambda) = 1 inside [min loss, max loss].
double solve_lambda(const ProbVector& p, std::span<const double> loss,
                    const LearningRateVector& eta, double tol = kDefaultLambdaTolerance);

struct StepResult {
  ProbVector next;
  double lambda;
};

/// One log-barrier OMD update: 1/q_i = 1/p_i + eta_i (loss_i - lambda).
StepResult omd_step_detailed(const ProbVector& p, std::span<const double> loss,
                             const LearningRateVector& eta);

ProbVector omd_step(const ProbVector& p, std::span<const double> loss,
                    const LearningRateVector& eta);

/// h(y) = y - 1 - ln y.
double barrier_h(double y);

/// D(p, q) = sum_i h(p_i / q_i) / eta_i.
double bregman_log_barrier(const LearningRateVector& eta, const ProbVector& p, const ProbVector& q);

}  // namespace corral::omd
