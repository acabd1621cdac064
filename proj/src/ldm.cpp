#include "ldmcvar/ldm.hpp"

#include <cmath>
#include <string>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

void RiskSpec::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
  if (!(c > 0.0)) throw ParameterError("sigmoid sharpness c must be positive");
  if (!(power > 0.0) || !std::isfinite(power)) throw ParameterError("power must be positive");
  if (!(norm_bound > 0.0)) throw ParameterError("norm bound S must be positive");
}

Eigen::VectorXd LayerAllocation::thresholds() const {
  Eigen::VectorXd t(s.size());
  double cum = 0.0;
  for (Eigen::Index m = 0; m < s.size(); ++m) t[m] = (cum += s[m]);
  return t;
}

void LayerAllocation::validate() const {
  if (s.size() == 0) throw ParameterError("allocation needs at least one layer");
  if (s.size() != lambda.size())
    throw ParameterError("allocation: s and lambda must have the same length");
  if (!s.allFinite() || !lambda.allFinite()) throw ParameterError("allocation: non-finite entry");
  if ((s.array() < 0.0).any()) throw ParameterError("allocation: s must be nonnegative");
  if ((lambda.array() < 0.0).any()) throw ParameterError("allocation: lambda must be nonnegative");
  if (lambda.sum() > 1.0 + 1e-9) throw ParameterError("allocation: sum(lambda) exceeds 1");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double interference(const LayerAllocation& alloc, int m) {
  if (m < 0 || m >= alloc.layers())
    throw ParameterError("layer index " + std::to_string(m) + " out of range");
  return alloc.lambda.tail(alloc.layers() - m - 1).sum();
}

Eigen::VectorXd layer_rates(const LayerAllocation& alloc, const RiskSpec& spec) {
  return layer_terms<double>(alloc.s, alloc.lambda, spec.power).rate * kInvLn2;
}

double layer_rate(const LayerAllocation& alloc, int m, const RiskSpec& spec) {
  if (m < 0 || m >= alloc.layers())
    throw ParameterError("layer index " + std::to_string(m) + " out of range");
  return layer_rates(alloc, spec)[m];
}

double total_rate(const LayerAllocation& alloc, double g, const RiskSpec& spec) {
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  double acc = 0.0;
  for (Eigen::Index m = 0; m < t.rate.size(); ++m) {
    if (g >= t.threshold[m]) acc += t.rate[m];
  }
  return acc * kInvLn2;
}

double surrogate_rate(const LayerAllocation& alloc, double g, const RiskSpec& spec) {
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(alloc.layers());
  Eigen::VectorXd dw = Eigen::VectorXd::Zero(alloc.layers());
  accumulate_sigmoid_weights<double>(t.threshold, g, spec.c, 1.0, w, dw);
  return weighted_rate(t, w) * kInvLn2;
}

RateGradient surrogate_rate_grad(const LayerAllocation& alloc, double g, const RiskSpec& spec) {
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  const int M = alloc.layers();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
  Eigen::VectorXd dw = Eigen::VectorXd::Zero(M);
  accumulate_sigmoid_weights<double>(t.threshold, g, spec.c, 1.0, w, dw);
  RateGradient grad{Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M)};
  accumulate_weighted_grad<double>(t, w, dw, kInvLn2, grad.s, grad.lambda);
  return grad;
}

}  // namespace ldmcvar
