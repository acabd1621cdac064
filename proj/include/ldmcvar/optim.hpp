#pragma once

// Block mirror ascent: gradient ascent on u with s = exp(u), exponentiated
// gradient on the power simplex.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ldmcvar/fading.hpp"
#include "ldmcvar/ldm.hpp"
#include "ldmcvar/risk.hpp"

namespace ldmcvar {

enum class InitMode { quantile, random };

struct OptimConfig {
  int layers = 6;
  double eta = 0.01;
  double gamma = 0.01;
  int max_iters = 50000;
  double rel_tol = 1e-8;
  double grad_clip = 1e6;
  InitMode init = InitMode::quantile;
  std::uint64_t init_seed = 0;
  std::optional<Eigen::VectorXd> u_init;
  std::optional<Eigen::VectorXd> lambda_init;
  /// Feed the fresh u into the lambda step instead of the previous iterate.
  bool gauss_seidel = false;
  SurrogateTarget target = SurrogateTarget::cvar;

  void validate() const;
};

struct OptimTrace {
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

struct OptimResult {
  LayerAllocation alloc;
  OptimTrace trace;
};

/// Value of an objective at (s, lambda); fills the gradient when non-null.
using ObjectiveFn =
    std::function<double(const Eigen::VectorXd& s, const Eigen::VectorXd& lambda, RateGradient*)>;

template <typename Scalar>
Scalar clip(const Scalar& x, double bound) {
  if (value_of(x) > bound) return Scalar(bound);
  if (value_of(x) < -bound) return Scalar(-bound);
  return x;
}

/// u + eta * diag(exp(u)) grad_s, with the u-gradient clipped componentwise.
template <typename Scalar>
Vector<Scalar> apply_gd(const Vector<Scalar>& u, const Vector<Scalar>& grad_s, double eta,
                        double grad_clip) {
  using std::exp;
  Vector<Scalar> out(u.size());
  for (Eigen::Index m = 0; m < u.size(); ++m)
    out[m] = u[m] + eta * clip<Scalar>(exp(u[m]) * grad_s[m], grad_clip);
  return out;
}

/// Smallest power share EG may produce, so lambda stays strictly positive.
inline constexpr double kLambdaFloor = 1e-300;

/// lambda_m exp(gamma g_m) / sum_k lambda_k exp(gamma g_k), shifted by max g.
template <typename Scalar>
Vector<Scalar> apply_eg(const Vector<Scalar>& lambda, const Vector<Scalar>& grad_lambda,
                        double gamma, double grad_clip) {
  using std::exp;
  const Eigen::Index M = lambda.size();
  Vector<Scalar> g(M);
  for (Eigen::Index m = 0; m < M; ++m) g[m] = clip<Scalar>(grad_lambda[m], grad_clip);
  Scalar top = g[0];
  for (Eigen::Index m = 1; m < M; ++m)
    if (g[m] > top) top = g[m];
  Vector<Scalar> out(M);
  Scalar total = Scalar(0.0);
  for (Eigen::Index m = 0; m < M; ++m) {
    out[m] = lambda[m] * exp(gamma * (g[m] - top));
    if (value_of(out[m]) < kLambdaFloor) out[m] = Scalar(kLambdaFloor);
    total += out[m];
  }
  for (Eigen::Index m = 0; m < M; ++m) out[m] /= total;
  return out;
}

Eigen::VectorXd gd_step(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                        const GainDataset& data, const RiskSpec& spec, double eta,
                        double grad_clip = 1e6);
Eigen::VectorXd eg_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& u,
                        const GainDataset& data, const RiskSpec& spec, double gamma,
                        double grad_clip = 1e6);

/// u whose thresholds sit at the beta*m/(M+1) quantiles, m = 1..M.
Eigen::VectorXd quantile_init(const GainDataset& data, int layers, double beta);
Eigen::VectorXd quantile_init(const FadingModel& model, int layers, double beta);
/// M equal increments reaching `top`; the known-distribution default with top = E[g].
Eigen::VectorXd equal_increment_init(int layers, double top);
/// u ~ N(0, 1) componentwise.
Eigen::VectorXd random_init(int layers, std::uint64_t seed);
Eigen::VectorXd uniform_simplex(int layers);

/// Alternating u / lambda ascent on an arbitrary smooth objective.
OptimResult mirror_ascent(const ObjectiveFn& objective, Eigen::VectorXd u,
                          Eigen::VectorXd lambda, const OptimConfig& config);

/// Maximizes the surrogate empirical tail objective over the dataset.
OptimResult optimize(const GainDataset& data, const RiskSpec& spec, const OptimConfig& config);

/// Maximizes the exact expected rate sum_m rho_m ccdf(T_m) of a known model.
OptimResult optimize_known_distribution(const FadingModel& model, const RiskSpec& spec,
                                        const OptimConfig& config);

}  // namespace ldmcvar
