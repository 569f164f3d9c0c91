#include "corral/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace corral {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidProbability: return "invalid-probability";
    case ErrorKind::kInvalidLoss: return "invalid-loss";
    case ErrorKind::kDegenerateDistribution: return "degenerate-distribution";
    case ErrorKind::kNormalizationDrift: return "normalization-drift";
    case ErrorKind::kSolverNonconvergence: return "solver-nonconvergence";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kIntegrity: return "integrity";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

PolicyClass constant_policies(std::size_t num_arms, std::size_t num_contexts) {
  PolicyClass out;
  out.reserve(num_arms);
  for (DecisionId a = 0; a < num_arms; ++a) out.emplace_back(num_contexts, a);
  return out;
}

void check_policy_class(const PolicyClass& policies, std::size_t num_arms,
                        std::size_t num_contexts) {
  if (policies.empty()) throw Error(ErrorKind::kConfig, "empty policy class");
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const Policy& pol = policies[k];
    if (pol.size() != num_contexts) {
      throw Error(ErrorKind::kConfig, "policy " + std::to_string(k) + " covers " +
                                          std::to_string(pol.size()) + " contexts, expected " +
                                          std::to_string(num_contexts));
    }
    for (DecisionId a : pol) {
      if (a >= num_arms) {
        throw Error(ErrorKind::kConfig,
                    "policy " + std::to_string(k) + " maps to out-of-range action " +
                        std::to_string(a));
      }
    }
  }
}

PolicyClass policy_union(const std::vector<PolicyClass>& classes) {
  PolicyClass out;
  for (const auto& cls : classes) {
    for (const auto& pol : cls) {
      if (std::find(out.begin(), out.end(), pol) == out.end()) out.push_back(pol);
    }
  }
  return out;
}

ProbVector::ProbVector(std::vector<double> entries)
    : ProbVector(validate_simplex(std::move(entries))) {}

ProbVector ProbVector::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorKind::kDegenerateDistribution, "empty distribution");
  return ProbVector(Trusted{}, std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

ProbVector validate_simplex(std::vector<double> entries) {
  if (entries.empty()) throw Error(ErrorKind::kDegenerateDistribution, "empty distribution");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!std::isfinite(entries[i])) {
      throw Error(ErrorKind::kDegenerateDistribution,
                  "non-finite entry at index " + std::to_string(i));
    }
    if (entries[i] <= 0.0) {
      std::ostringstream msg;
      msg << "entry " << i << " = " << entries[i] << " is not strictly positive";
      throw Error(ErrorKind::kDegenerateDistribution, msg.str());
    }
  }
  const double sum = std::accumulate(entries.begin(), entries.end(), 0.0);
  if (std::abs(sum - 1.0) > kSimplexHardFail) {
    std::ostringstream msg;
    msg << "entries sum to " << sum;
    throw Error(ErrorKind::kNormalizationDrift, msg.str());
  }
  for (double& e : entries) e /= sum;
  return ProbVector(ProbVector::Trusted{}, std::move(entries));
}

void check_loss(double raw) {
  if (!(raw >= 0.0 && raw <= 1.0)) {
    std::ostringstream msg;
    msg << "loss " << raw << " outside [0,1]";
    throw Error(ErrorKind::kInvalidLoss, msg.str());
  }
}

void check_probability(double prob) {
  if (!(prob > 0.0 && prob <= 1.0)) {
    std::ostringstream msg;
    msg << "probability " << prob << " outside (0,1]";
    throw Error(ErrorKind::kInvalidProbability, msg.str());
  }
}

FeedbackPacket importance_weight(double raw, double prob, bool selected) {
  check_probability(prob);
  check_loss(raw);
  FeedbackPacket packet;
  packet.selected = selected;
  packet.sampling_prob = prob;
  if (selected) {
    packet.weighted_loss = raw / prob;
    packet.raw_loss = raw;
  }
  return packet;
}

const char* to_string(EnvironmentClass cls) {
  switch (cls) {
    case EnvironmentClass::kStochasticMab: return "stochastic-mab";
    case EnvironmentClass::kAdversarialMab: return "adversarial-mab";
    case EnvironmentClass::kStochasticContextual: return "stochastic-contextual";
    case EnvironmentClass::kAdversarialContextual: return "adversarial-contextual";
  }
  return "unknown";
}

StabilityCertificate::StabilityCertificate(double alpha_in,
                                           std::function<double(double)> regret_bound_in,
                                           EnvironmentClass environment_class_in)
    : alpha(alpha_in),
      regret_bound(std::move(regret_bound_in)),
      environment_class(environment_class_in) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kConfig, "stability exponent must lie in (0,1]");
  }
  if (!regret_bound) throw Error(ErrorKind::kConfig, "missing regret bound");
}

bool StabilityCertificate::regret_bound_nondecreasing(std::vector<double> horizons) const {
  std::sort(horizons.begin(), horizons.end());
  for (std::size_t k = 1; k < horizons.size(); ++k) {
    if (regret_bound(horizons[k - 1]) > regret_bound(horizons[k])) return false;
  }
  return true;
}

}  // namespace corral
