#pragma once

// MAML over deployments. Each task adapts the shared initialization (u, lambda)
// with one mirror-ascent step on its own data; the initialization is then updated by
// ascending the summed post-adaptation surrogate CVaR, differentiating through
// the inner step.

#include <cstdint>
#include <optional>
#include <vector>

#include "ldmcvar/optim.hpp"

namespace ldmcvar {

struct TaskSet {
  std::vector<GainDataset> tasks;

  std::size_t size() const { return tasks.size(); }
  /// Throws ParameterError if there are no tasks or any task is empty.
  void validate() const;
};

/// One dataset of n gains per model, task i drawn with seeds[i].
TaskSet sample_tasks(const std::vector<FadingModel>& models, std::size_t n,
                     const std::vector<std::uint64_t>& seeds);

enum class JacobianMode {
  exact,              ///< forward-mode directional derivatives
  finite_difference,  ///< central differences of the inner map
  first_order,        ///< identity on matching blocks, zero cross blocks
};

struct MetaConfig {
  /// Meta step sizes; unset means 0.01 / D.
  std::optional<double> eta_bar;
  std::optional<double> gamma_bar;
  double eta = 0.01;    ///< inner u step
  double gamma = 0.01;  ///< inner lambda step
  int meta_iters = 2000;
  JacobianMode jacobian_mode = JacobianMode::exact;
  double fd_step = 1e-5;
  double grad_clip = 1e6;
  int layers = 6;
  std::uint64_t init_seed = 0;
  std::optional<Eigen::VectorXd> u_init;
  std::optional<Eigen::VectorXd> lambda_init;

  double meta_eta(std::size_t tasks) const;
  double meta_gamma(std::size_t tasks) const;
  void validate() const;
};

template <typename Scalar>
struct Iterate {
  Vector<Scalar> u;
  Vector<Scalar> lambda;
};

/// One Jacobi mirror-ascent step on the surrogate CVaR of `data`.
template <typename Scalar>
Iterate<Scalar> inner_update(const Vector<Scalar>& u, const Vector<Scalar>& lambda,
                             const GainDataset& data, const RiskSpec& spec, double eta,
                             double gamma, double grad_clip) {
  using std::exp;
  Vector<Scalar> s(u.size());
  for (Eigen::Index m = 0; m < u.size(); ++m) s[m] = exp(u[m]);
  Vector<Scalar> gs(u.size());
  Vector<Scalar> gl(u.size());
  surrogate_objective<Scalar>(s, lambda, data, spec, SurrogateTarget::cvar, &gs, &gl);
  return {apply_gd<Scalar>(u, gs, eta, grad_clip), apply_eg<Scalar>(lambda, gl, gamma, grad_clip)};
}

Iterate<double> inner_adapt(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                            const GainDataset& task, const RiskSpec& spec, double eta,
                            double gamma, double grad_clip = 1e6);

/// Jacobian of (u_tau, lambda_tau) with respect to (u, lambda), as a 2M x 2M
/// matrix with blocks [[du_tau/du, du_tau/dlambda], [dlambda_tau/du, dlambda_tau/dlambda]].
Eigen::MatrixXd inner_jacobian(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                               const GainDataset& task, const RiskSpec& spec,
                               const MetaConfig& config);

/// sum over tasks of the surrogate CVaR after one inner update.
double meta_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                      const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config);

struct MetaGradient {
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
  double objective = 0.0;
};

MetaGradient meta_gradient(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                           const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config);

Eigen::VectorXd meta_gd_step(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                             const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config);
Eigen::VectorXd meta_eg_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& u,
                             const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config);

struct MetaResult {
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
  std::vector<double> objective;  ///< meta objective before each meta step
};

MetaResult maml_train(const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config);

/// New-deployment protocol: one inner update from (u, lambda) on `data`, then
/// optionally mirror ascent to convergence from the adapted point.
OptimResult fine_tune(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                      const GainDataset& data, const RiskSpec& spec, const MetaConfig& meta,
                      OptimConfig optim, bool continue_alg1 = true);

}  // namespace ldmcvar
