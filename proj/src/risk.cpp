#include "ldmcvar/risk.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

long nint(double x) {
  if (!(x > 0.0)) throw ParameterError("nint: argument must be positive");
  return std::max(1L, static_cast<long>(std::floor(x + 0.5)));
}

std::size_t tail_count(std::size_t n, double beta, TailRule rule) {
  if (n == 0) throw ParameterError("empty dataset");
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
  const double nb = static_cast<double>(n) * beta;
  std::size_t k = 0;
  if (rule == TailRule::nearest) {
    k = static_cast<std::size_t>(nint(nb));
  } else {
    // Guard against N*beta landing a hair above an integer through rounding.
    const double r = std::round(nb);
    k = std::abs(nb - r) <= 1e-9 * std::max(1.0, nb) ? static_cast<std::size_t>(r)
                                                     : static_cast<std::size_t>(std::ceil(nb));
  }
  return std::clamp<std::size_t>(k, 1, n);
}

TailWeights tail_weights(std::size_t n, double beta, TailRule rule) {
  TailWeights tw;
  tw.count = tail_count(n, beta, rule);
  const double nb = static_cast<double>(n) * beta;
  tw.per_sample = 1.0 / nb;
  tw.boundary = 1.0 - static_cast<double>(tw.count) / nb;
  if (beta == 1.0) {
    tw.per_sample = 1.0 / static_cast<double>(n);
    tw.boundary = 0.0;
  }
  return tw;
}

namespace {

void check_inputs(const LayerAllocation& alloc, const RiskSpec& spec) {
  alloc.validate();
  spec.validate();
}

// Exact rate functional sum_m rho_m W_m with W_m built from counts over the
// smallest `prefix` sorted gains.
double exact_tail_rate(const LayerAllocation& alloc, const GainDataset& data,
                       const RiskSpec& spec, const TailWeights& tw) {
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  const double boundary_gain = data[tw.count - 1];
  double acc = 0.0;
  for (Eigen::Index m = 0; m < t.rate.size(); ++m) {
    const double T = t.threshold[m];
    const double hits = static_cast<double>(data.count_at_least(T, tw.count));
    const double w = tw.per_sample * hits + (boundary_gain >= T ? tw.boundary : 0.0);
    acc += t.rate[m] * w;
  }
  return acc * kInvLn2;
}

}  // namespace

double empirical_mean_rate(const LayerAllocation& alloc, const GainDataset& data,
                           const RiskSpec& spec) {
  check_inputs(alloc, spec);
  if (data.size() == 0) throw ParameterError("empty dataset");
  const TailWeights all{data.size(), 1.0 / static_cast<double>(data.size()), 0.0};
  return exact_tail_rate(alloc, data, spec, all);
}

double empirical_outage_rate(const LayerAllocation& alloc, const GainDataset& data,
                             const RiskSpec& spec) {
  check_inputs(alloc, spec);
  if (data.size() == 0) throw ParameterError("empty dataset");
  const std::size_t k = tail_count(data.size(), spec.beta, spec.tail_rule);
  return total_rate(alloc, data[k - 1], spec);
}

double variational_f(const LayerAllocation& alloc, double r, const GainDataset& data,
                     const RiskSpec& spec) {
  check_inputs(alloc, spec);
  if (data.size() == 0) throw ParameterError("empty dataset");
  double hinge = 0.0;
  for (double g : data.gains()) hinge += std::max(0.0, r - total_rate(alloc, g, spec));
  return r - hinge / (static_cast<double>(data.size()) * spec.beta);
}

double empirical_cvar(const LayerAllocation& alloc, const GainDataset& data,
                      const RiskSpec& spec) {
  check_inputs(alloc, spec);
  if (data.size() == 0) throw ParameterError("empty dataset");
  return exact_tail_rate(alloc, data, spec, tail_weights(data.size(), spec.beta, spec.tail_rule));
}

double surrogate_empirical_cvar(const LayerAllocation& alloc, const GainDataset& data,
                                const RiskSpec& spec) {
  check_inputs(alloc, spec);
  return surrogate_objective<double>(alloc.s, alloc.lambda, data, spec, SurrogateTarget::cvar);
}

RateGradient surrogate_empirical_cvar_grad(const LayerAllocation& alloc,
                                           const GainDataset& data, const RiskSpec& spec) {
  check_inputs(alloc, spec);
  RateGradient grad;
  surrogate_objective<double>(alloc.s, alloc.lambda, data, spec, SurrogateTarget::cvar,
                              &grad.s, &grad.lambda);
  return grad;
}

double analytic_mean_rate(const LayerAllocation& alloc, const FadingModel& model,
                          const RiskSpec& spec) {
  check_inputs(alloc, spec);
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  double acc = 0.0;
  for (Eigen::Index m = 0; m < t.rate.size(); ++m) acc += t.rate[m] * ccdf(model, t.threshold[m]);
  return acc * kInvLn2;
}

RateGradient analytic_mean_rate_grad(const LayerAllocation& alloc, const FadingModel& model,
                                     const RiskSpec& spec) {
  check_inputs(alloc, spec);
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  const int M = alloc.layers();
  Eigen::VectorXd w(M);
  Eigen::VectorXd dw(M);
  for (int m = 0; m < M; ++m) {
    w[m] = ccdf(model, t.threshold[m]);
    dw[m] = -pdf(model, t.threshold[m]);
  }
  RateGradient grad{Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M)};
  accumulate_weighted_grad<double>(t, w, dw, kInvLn2, grad.s, grad.lambda);
  return grad;
}

namespace {

// Distribution of the step rate R(g): level k (0..M) is the cumulative rate of
// the first k layers, reached with probability ccdf(T_k) - ccdf(T_{k+1}).
struct RateLevels {
  std::vector<double> value;
  std::vector<double> at_least;  // Pr[number of decodable layers >= k]
};

RateLevels rate_levels(const LayerAllocation& alloc, const FadingModel& model,
                       const RiskSpec& spec) {
  const auto t = layer_terms<double>(alloc.s, alloc.lambda, spec.power);
  const int M = alloc.layers();
  RateLevels lv;
  lv.value.assign(M + 1, 0.0);
  lv.at_least.assign(M + 1, 1.0);
  for (int k = 1; k <= M; ++k) {
    lv.value[k] = lv.value[k - 1] + t.rate[k - 1] * kInvLn2;
    lv.at_least[k] = ccdf(model, t.threshold[k - 1]);
  }
  return lv;
}

double outage_from_levels(const RateLevels& lv, double beta) {
  const std::size_t n = lv.value.size();
  double best = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    // Pr[R >= value_k] is governed by the first level attaining that value.
    std::size_t first = k;
    while (first > 0 && lv.value[first - 1] >= lv.value[k]) --first;
    if (lv.at_least[first] >= 1.0 - beta) best = std::max(best, lv.value[k]);
  }
  return best;
}

}  // namespace

double analytic_outage_rate(const LayerAllocation& alloc, const FadingModel& model,
                            const RiskSpec& spec) {
  check_inputs(alloc, spec);
  model.validate();
  return outage_from_levels(rate_levels(alloc, model, spec), spec.beta);
}

double analytic_cvar(const LayerAllocation& alloc, const FadingModel& model,
                     const RiskSpec& spec) {
  check_inputs(alloc, spec);
  model.validate();
  const RateLevels lv = rate_levels(alloc, model, spec);
  const double r = outage_from_levels(lv, spec.beta);
  // f_beta(r) = r - E[(r - R)^+] / beta, evaluated at its maximizer r_beta.
  double hinge = 0.0;
  const std::size_t n = lv.value.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double mass = lv.at_least[k] - (k + 1 < n ? lv.at_least[k + 1] : 0.0);
    hinge += mass * std::max(0.0, r - lv.value[k]);
  }
  return r - hinge / spec.beta;
}

RiskReport empirical_report(const LayerAllocation& alloc, const GainDataset& data,
                            const RiskSpec& spec) {
  RiskReport rep;
  rep.mean_rate = empirical_mean_rate(alloc, data, spec);
  rep.outage_rate = empirical_outage_rate(alloc, data, spec);
  rep.cvar_rate = empirical_cvar(alloc, data, spec);
  rep.beta = spec.beta;
  rep.n_used = tail_count(data.size(), spec.beta, spec.tail_rule);
  rep.oracle = "empirical";
  return rep;
}

RiskReport analytic_report(const LayerAllocation& alloc, const FadingModel& model,
                           const RiskSpec& spec) {
  RiskReport rep;
  rep.mean_rate = analytic_mean_rate(alloc, model, spec);
  rep.outage_rate = analytic_outage_rate(alloc, model, spec);
  rep.cvar_rate = analytic_cvar(alloc, model, spec);
  rep.beta = spec.beta;
  rep.n_used = 0;
  rep.oracle = "analytic";
  return rep;
}

}  // namespace ldmcvar
