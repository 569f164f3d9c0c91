#include "corral/omd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace corral::omd {
namespace {

void check_inputs(const ProbVector& p, std::span<const double> loss,
                  const LearningRateVector& eta) {
  if (loss.size() != p.size() || eta.size() != p.size()) {
    throw Error(ErrorKind::kContract, "distribution, loss and rate sizes differ");
  }
  for (double l : loss) {
    if (!std::isfinite(l) || l < 0.0) {
      throw Error(ErrorKind::kInvalidLoss, "OMD losses must be finite and non-negative");
    }
  }
}

}  // namespace

LearningRateVector::LearningRateVector(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw Error(ErrorKind::kConfig, "empty learning-rate vector");
  for (double r : rates_) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorKind::kConfig, "learning rates must be finite and positive");
    }
  }
}

LearningRateVector LearningRateVector::constant(std::size_t size, double rate) {
  return LearningRateVector(std::vector<double>(size, rate));
}

void LearningRateVector::scale(std::size_t i, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorKind::kContract, "rate factor must be positive");
  rates_.at(i) *= factor;
}

double normalization_sum(const ProbVector& p, std::span<const double> loss,
                         const LearningRateVector& eta, double lambda) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double denom = 1.0 / p[i] + eta[i] * (loss[i] - lambda);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    sum += 1.0 / denom;
  }
  return sum;
}

LambdaBracket lambda_bracket(std::span<const double> loss) {
  const auto [lo, hi] = std::minmax_element(loss.begin(), loss.end());
  return {*lo, *hi};
}

double solve_lambda(const ProbVector& p, std::span<const double> loss,
                    const LearningRateVector& eta, double tol) {
  check_inputs(p, loss, eta);
  if (!(tol > 0.0)) throw Error(ErrorKind::kContract, "tolerance must be positive");

  auto [lo, hi] = lambda_bracket(loss);
  if (lo == hi) return lo;

  // F is increasing in lambda: F(lo) <= 1 <= F(hi).
  double mid = lo;
  for (int iter = 0; iter < kMaxBisectionIterations; ++iter) {
    mid = lo + 0.5 * (hi - lo);
    const double f = normalization_sum(p, loss, eta, mid);
    if (std::abs(f - 1.0) <= tol) return mid;
    if (mid <= lo || mid >= hi) break;
    if (f < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::ostringstream msg;
  msg << "bisection stalled at lambda=" << mid << " with |F-1|="
      << std::abs(normalization_sum(p, loss, eta, mid) - 1.0);
  throw Error(ErrorKind::kSolverNonconvergence, msg.str());
}

StepResult omd_step_detailed(const ProbVector& p, std::span<const double> loss,
                             const LearningRateVector& eta) {
  const double lambda = solve_lambda(p, loss, eta);
  const auto [lo, hi] = lambda_bracket(loss);
  if (lo == hi) return {p, lambda};

  std::vector<double> next(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    next[i] = 1.0 / (1.0 / p[i] + eta[i] * (loss[i] - lambda));
  }
  return {validate_simplex(std::move(next)), lambda};
}

ProbVector omd_step(const ProbVector& p, std::span<const double> loss,
                    const LearningRateVector& eta) {
  return omd_step_detailed(p, loss, eta).next;
}

double barrier_h(double y) { return y - 1.0 - std::log(y); }

double bregman_log_barrier(const LearningRateVector& eta, const ProbVector& p,
                           const ProbVector& q) {
  if (p.size() != q.size() || eta.size() != p.size()) {
    throw Error(ErrorKind::kContract, "size mismatch in Bregman divergence");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += barrier_h(p[i] / q[i]) / eta[i];
  return d;
}

}  // namespace corral::omd
