#pragma once

// Layered-division-multiplexing rate model.
//
// Layer m (0-based here) carries rate
//     rho_m = log2(1 + T_m lambda_m P / (1 + T_m I_m P)),
// where T_m = s_0 + ... + s_m is the decoding threshold and
// I_m = lambda_{m+1} + ... + lambda_{M-1} the residual interference. Writing
// A_m = lambda_m + I_m gives rho_m = ln(1 + T_m A_m P) - ln(1 + T_m I_m P)
// (in nats), which is the form differentiated below.
//
// Every rate functional used in the library is of the form
//     sum_m rho_m * W_m(T_m)
// with W_m a per-layer decoding weight: an indicator for the exact rate, a
// sigmoid for the surrogate, the CCDF for the known-distribution expectation.
// The kernels here take W and dW/dT and produce values and gradients for all
// of them. See docs/gradients.md for the derivation.

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "ldmcvar/dual.hpp"

namespace ldmcvar {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

/// How the tail sample count is derived from N * beta.
enum class TailRule {
  ceiling,  ///< ceil(N beta), the exact maximizer of the variational form
  nearest,  ///< nearest positive integer, half away from zero
};

struct RiskSpec {
  double beta = 1.0;
  double c = 10.0;          ///< sigmoid sharpness
  double power = 100.0;     ///< linear transmit SNR P
  double norm_bound = 10.0; ///< S, bound on ||s||_1 used by the gap bounds
  TailRule tail_rule = TailRule::ceiling;

  void validate() const;
};

/// Threshold increments s and normalized powers lambda.
struct LayerAllocation {
  Eigen::VectorXd s;
  Eigen::VectorXd lambda;

  int layers() const { return static_cast<int>(s.size()); }
  /// Cumulative thresholds T_m.
  Eigen::VectorXd thresholds() const;
  /// Throws ParameterError unless s >= 0, lambda >= 0, sum(lambda) <= 1 + 1e-9.
  void validate() const;
};

struct RateGradient {
  Eigen::VectorXd s;
  Eigen::VectorXd lambda;
};

double db_to_linear(double db);

/// I_m for 0-based layer m.
double interference(const LayerAllocation& alloc, int m);
/// rho_m in bits for 0-based layer m.
double layer_rate(const LayerAllocation& alloc, int m, const RiskSpec& spec);
Eigen::VectorXd layer_rates(const LayerAllocation& alloc, const RiskSpec& spec);
/// Exact decodable rate at gain g (bits).
double total_rate(const LayerAllocation& alloc, double g, const RiskSpec& spec);
/// Sigmoid-smoothed rate at gain g (bits).
double surrogate_rate(const LayerAllocation& alloc, double g, const RiskSpec& spec);
RateGradient surrogate_rate_grad(const LayerAllocation& alloc, double g, const RiskSpec& spec);

// ---------------------------------------------------------------------------
// Scalar-generic kernels

template <typename Scalar>
struct LayerTerms {
  Vector<Scalar> threshold;  ///< T_m
  Vector<Scalar> rate;       ///< rho_m, nats
  Vector<Scalar> d_thresh;   ///< d rho_m / d T_m
  Vector<Scalar> d_tail;     ///< d rho_m / d A_m
  Vector<Scalar> d_interf;   ///< d rho_m / d I_m
};

template <typename Scalar>
LayerTerms<Scalar> layer_terms(const Vector<Scalar>& s, const Vector<Scalar>& lambda,
                               double power) {
  using std::log1p;
  const Eigen::Index M = s.size();
  LayerTerms<Scalar> t;
  t.threshold.resize(M);
  t.rate.resize(M);
  t.d_thresh.resize(M);
  t.d_tail.resize(M);
  t.d_interf.resize(M);

  Scalar cum = Scalar(0.0);
  for (Eigen::Index m = 0; m < M; ++m) {
    cum += s[m];
    t.threshold[m] = cum;
  }
  Scalar interf = Scalar(0.0);
  for (Eigen::Index m = M - 1; m >= 0; --m) {
    const Scalar tail = interf + lambda[m];
    const Scalar T = t.threshold[m];
    const Scalar hi = Scalar(1.0) + T * tail * power;
    const Scalar lo = Scalar(1.0) + T * interf * power;
    t.rate[m] = log1p(T * tail * power) - log1p(T * interf * power);
    t.d_thresh[m] = tail * power / hi - interf * power / lo;
    t.d_tail[m] = T * power / hi;
    t.d_interf[m] = -T * power / lo;
    interf = tail;
  }
  return t;
}

/// sum_m rho_m W_m in nats.
template <typename Scalar>
Scalar weighted_rate(const LayerTerms<Scalar>& t, const Vector<Scalar>& weight) {
  Scalar acc = Scalar(0.0);
  for (Eigen::Index m = 0; m < t.rate.size(); ++m) acc += t.rate[m] * weight[m];
  return acc;
}

/// Adds scale * gradient of sum_m rho_m W_m(T_m) to (grad_s, grad_lambda),
/// given W and dW/dT. O(M) via prefix/suffix sums.
template <typename Scalar>
void accumulate_weighted_grad(const LayerTerms<Scalar>& t, const Vector<Scalar>& weight,
                              const Vector<Scalar>& dweight, const Scalar& scale,
                              Vector<Scalar>& grad_s, Vector<Scalar>& grad_lambda) {
  const Eigen::Index M = t.rate.size();
  // s_k enters every T_m with m >= k.
  Scalar suffix = Scalar(0.0);
  for (Eigen::Index k = M - 1; k >= 0; --k) {
    suffix += t.d_thresh[k] * weight[k] + t.rate[k] * dweight[k];
    grad_s[k] += scale * suffix;
  }
  // lambda_j enters A_m for m <= j and I_m for m < j.
  Scalar tail_part = Scalar(0.0);
  Scalar interf_part = Scalar(0.0);
  for (Eigen::Index j = 0; j < M; ++j) {
    tail_part += weight[j] * t.d_tail[j];
    grad_lambda[j] += scale * (tail_part + interf_part);
    interf_part += weight[j] * t.d_interf[j];
  }
}

template <typename Scalar>
Scalar sigmoid(const Scalar& x) {
  using std::exp;
  if (value_of(x) >= 0.0) return Scalar(1.0) / (Scalar(1.0) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1.0) + e);
}

/// Adds coef * sigma(c (g - T_m)) to W_m and its T-derivative to dW_m.
template <typename Scalar>
void accumulate_sigmoid_weights(const Vector<Scalar>& threshold, double g, double c,
                                double coef, Vector<Scalar>& weight,
                                Vector<Scalar>& dweight) {
  for (Eigen::Index m = 0; m < threshold.size(); ++m) {
    const Scalar sig = sigmoid(Scalar(c) * (Scalar(g) - threshold[m]));
    weight[m] += coef * sig;
    dweight[m] -= (coef * c) * sig * (Scalar(1.0) - sig);
  }
}

}  // namespace ldmcvar
