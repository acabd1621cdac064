#pragma once

// Outage-rate and CVaR functionals of the decoded rate: empirical (over a
// sorted gain dataset), sigmoid surrogate (differentiable), and analytic
// (known fading distribution).

#include <cstddef>
#include <string>

#include "ldmcvar/fading.hpp"
#include "ldmcvar/ldm.hpp"

namespace ldmcvar {

struct RiskReport {
  double mean_rate = 0.0;
  double outage_rate = 0.0;
  double cvar_rate = 0.0;
  double beta = 1.0;
  std::size_t n_used = 0;   ///< tail sample count; 0 for analytic reports
  std::string oracle;       ///< "analytic" or "empirical"
};

/// Nearest positive integer: half away from zero, clamped below at 1.
/// Throws ParameterError for x <= 0.
long nint(double x);

/// Size of the worst-client subset G_beta for n samples.
std::size_t tail_count(std::size_t n, double beta, TailRule rule = TailRule::ceiling);

/// Coefficients of the empirical CVaR as a combination of sorted-sample rates:
///   R_beta = per_sample * sum_{i<=count} R(g_[i]) + boundary * R(g_[count]).
struct TailWeights {
  std::size_t count = 1;
  double per_sample = 1.0;
  double boundary = 0.0;
};
TailWeights tail_weights(std::size_t n, double beta, TailRule rule);

double empirical_mean_rate(const LayerAllocation& alloc, const GainDataset& data,
                           const RiskSpec& spec);
double empirical_outage_rate(const LayerAllocation& alloc, const GainDataset& data,
                             const RiskSpec& spec);
/// r - (1 / (N beta)) sum_i (r - R(g_i))^+.
double variational_f(const LayerAllocation& alloc, double r, const GainDataset& data,
                     const RiskSpec& spec);
double empirical_cvar(const LayerAllocation& alloc, const GainDataset& data,
                      const RiskSpec& spec);

/// Which smoothed tail functional to optimize.
enum class SurrogateTarget {
  cvar,    ///< surrogate empirical beta-CVaR (beta = 1 gives the average rate)
  outage,  ///< R_sigma at the tail boundary sample g_[K]
};

double surrogate_empirical_cvar(const LayerAllocation& alloc, const GainDataset& data,
                                const RiskSpec& spec);
RateGradient surrogate_empirical_cvar_grad(const LayerAllocation& alloc,
                                           const GainDataset& data, const RiskSpec& spec);

double analytic_mean_rate(const LayerAllocation& alloc, const FadingModel& model,
                          const RiskSpec& spec);
RateGradient analytic_mean_rate_grad(const LayerAllocation& alloc, const FadingModel& model,
                                     const RiskSpec& spec);
double analytic_outage_rate(const LayerAllocation& alloc, const FadingModel& model,
                            const RiskSpec& spec);
double analytic_cvar(const LayerAllocation& alloc, const FadingModel& model,
                     const RiskSpec& spec);

RiskReport empirical_report(const LayerAllocation& alloc, const GainDataset& data,
                            const RiskSpec& spec);
RiskReport analytic_report(const LayerAllocation& alloc, const FadingModel& model,
                           const RiskSpec& spec);

/// Surrogate tail objective in bits, optionally accumulating its gradient.
/// The sorted index set is fixed by the data, so the gradient is exact.
template <typename Scalar>
Scalar surrogate_objective(const Vector<Scalar>& s, const Vector<Scalar>& lambda,
                           const GainDataset& data, const RiskSpec& spec,
                           SurrogateTarget target, Vector<Scalar>* grad_s = nullptr,
                           Vector<Scalar>* grad_lambda = nullptr) {
  const auto terms = layer_terms<Scalar>(s, lambda, spec.power);
  const Eigen::Index M = s.size();
  Vector<Scalar> w = Vector<Scalar>::Constant(M, Scalar(0.0));
  Vector<Scalar> dw = Vector<Scalar>::Constant(M, Scalar(0.0));
  const TailWeights tw = tail_weights(data.size(), spec.beta, spec.tail_rule);
  if (target == SurrogateTarget::cvar) {
    for (std::size_t i = 0; i < tw.count; ++i)
      accumulate_sigmoid_weights<Scalar>(terms.threshold, data[i], spec.c, tw.per_sample, w, dw);
    if (tw.boundary != 0.0)
      accumulate_sigmoid_weights<Scalar>(terms.threshold, data[tw.count - 1], spec.c,
                                         tw.boundary, w, dw);
  } else {
    accumulate_sigmoid_weights<Scalar>(terms.threshold, data[tw.count - 1], spec.c, 1.0, w, dw);
  }
  if (grad_s != nullptr && grad_lambda != nullptr) {
    grad_s->setConstant(M, Scalar(0.0));
    grad_lambda->setConstant(M, Scalar(0.0));
    accumulate_weighted_grad<Scalar>(terms, w, dw, Scalar(kInvLn2), *grad_s, *grad_lambda);
  }
  return weighted_rate(terms, w) * kInvLn2;
}

}  // namespace ldmcvar
