#include "ldmcvar/meta.hpp"

#include <cmath>
#include <sstream>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

void TaskSet::validate() const {
  if (tasks.empty()) throw ParameterError("task set is empty");
  for (const auto& t : tasks)
    if (t.size() == 0) throw ParameterError("task set contains an empty dataset");
}

TaskSet sample_tasks(const std::vector<FadingModel>& models, std::size_t n,
                     const std::vector<std::uint64_t>& seeds) {
  if (models.size() != seeds.size()) throw ParameterError("sample_tasks: one seed per model");
  TaskSet ts;
  for (std::size_t i = 0; i < models.size(); ++i) ts.tasks.push_back(sample_gains(models[i], n, seeds[i]));
  ts.validate();
  return ts;
}

double MetaConfig::meta_eta(std::size_t tasks) const {
  return eta_bar ? *eta_bar : 0.01 / static_cast<double>(tasks);
}

double MetaConfig::meta_gamma(std::size_t tasks) const {
  return gamma_bar ? *gamma_bar : 0.01 / static_cast<double>(tasks);
}

void MetaConfig::validate() const {
  if ((eta_bar && !(*eta_bar >= 0.0)) || (gamma_bar && !(*gamma_bar >= 0.0)))
    throw ParameterError("meta: meta step sizes must be nonnegative");
  if (!(eta >= 0.0) || !(gamma >= 0.0)) throw ParameterError("meta: inner steps must be nonnegative");
  if (meta_iters < 1) throw ParameterError("meta: meta_iters must be >= 1");
  if (!(fd_step > 0.0)) throw ParameterError("meta: fd_step must be positive");
  if (!(grad_clip > 0.0)) throw ParameterError("meta: grad_clip must be positive");
  if (layers < 1) throw ParameterError("meta: layers must be >= 1");
  if (u_init && u_init->size() != layers) throw ParameterError("meta: u_init has wrong length");
  if (lambda_init) {
    if (lambda_init->size() != layers) throw ParameterError("meta: lambda_init has wrong length");
    if ((lambda_init->array() <= 0.0).any() || std::abs(lambda_init->sum() - 1.0) > 1e-9)
      throw ParameterError("meta: lambda_init must be strictly positive and sum to 1");
  }
}

namespace {

void require_state(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
  if (u.size() == 0 || u.size() != lambda.size())
    throw ParameterError("meta: u and lambda must be nonempty and of equal length");
  if (!u.allFinite()) throw NumericalError("meta: non-finite u");
  if ((lambda.array() <= 0.0).any()) throw ParameterError("meta: lambda must be strictly positive");
}

Eigen::VectorXd stack(const Iterate<double>& it) {
  Eigen::VectorXd out(it.u.size() + it.lambda.size());
  out << it.u, it.lambda;
  return out;
}

// Column k of the inner-map Jacobian, k < M a u direction, else a lambda one.
Eigen::VectorXd jvp_exact(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, Eigen::Index k,
                          const GainDataset& task, const RiskSpec& spec, const MetaConfig& cfg) {
  const Eigen::Index M = u.size();
  Vector<Dual> ud(M);
  Vector<Dual> ld(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    ud[m] = Dual(u[m], k == m ? 1.0 : 0.0);
    ld[m] = Dual(lambda[m], k == M + m ? 1.0 : 0.0);
  }
  const Iterate<Dual> out = inner_update<Dual>(ud, ld, task, spec, cfg.eta, cfg.gamma, cfg.grad_clip);
  Eigen::VectorXd col(2 * M);
  for (Eigen::Index m = 0; m < M; ++m) {
    col[m] = out.u[m].d;
    col[M + m] = out.lambda[m].d;
  }
  return col;
}

Eigen::VectorXd jvp_fd(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, Eigen::Index k,
                       const GainDataset& task, const RiskSpec& spec, const MetaConfig& cfg) {
  const Eigen::Index M = u.size();
  const double h = cfg.fd_step;
  auto at = [&](double sign) {
    Eigen::VectorXd up = u;
    Eigen::VectorXd lp = lambda;
    if (k < M) up[k] += sign * h;
    else lp[k - M] += sign * h;
    return stack(inner_update<double>(up, lp, task, spec, cfg.eta, cfg.gamma, cfg.grad_clip));
  };
  return (at(1.0) - at(-1.0)) / (2.0 * h);
}

}  // namespace

Iterate<double> inner_adapt(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                            const GainDataset& task, const RiskSpec& spec, double eta,
                            double gamma, double grad_clip) {
  require_state(u, lambda);
  spec.validate();
  Iterate<double> out = inner_update<double>(u, lambda, task, spec, eta, gamma, grad_clip);
  if (!out.u.allFinite() || !out.lambda.allFinite())
    throw NumericalError("inner_adapt: non-finite adapted parameters");
  return out;
}

Eigen::MatrixXd inner_jacobian(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                               const GainDataset& task, const RiskSpec& spec,
                               const MetaConfig& config) {
  require_state(u, lambda);
  const Eigen::Index M = u.size();
  if (config.jacobian_mode == JacobianMode::first_order)
    return Eigen::MatrixXd::Identity(2 * M, 2 * M);
  Eigen::MatrixXd J(2 * M, 2 * M);
  for (Eigen::Index k = 0; k < 2 * M; ++k) {
    J.col(k) = config.jacobian_mode == JacobianMode::exact
                   ? jvp_exact(u, lambda, k, task, spec, config)
                   : jvp_fd(u, lambda, k, task, spec, config);
  }
  if (!J.allFinite()) throw NumericalError("inner_jacobian: non-finite Jacobian entry");
  return J;
}

double meta_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                      const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config) {
  tasks.validate();
  double acc = 0.0;
  for (const auto& task : tasks.tasks) {
    const auto a = inner_adapt(u, lambda, task, spec, config.eta, config.gamma, config.grad_clip);
    const Eigen::VectorXd s = a.u.array().exp();
    acc += surrogate_objective<double>(s, a.lambda, task, spec, SurrogateTarget::cvar);
  }
  return acc;
}

MetaGradient meta_gradient(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                           const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config) {
  tasks.validate();
  const Eigen::Index M = u.size();
  MetaGradient g{Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M), 0.0};
  for (const auto& task : tasks.tasks) {
    const auto a = inner_adapt(u, lambda, task, spec, config.eta, config.gamma, config.grad_clip);
    const Eigen::VectorXd s = a.u.array().exp();
    Eigen::VectorXd gs(M);
    Eigen::VectorXd gl(M);
    g.objective += surrogate_objective<double>(s, a.lambda, task, spec, SurrogateTarget::cvar, &gs, &gl);
    // Outer gradient in (u_tau, lambda_tau) coordinates, pulled back by J^T.
    Eigen::VectorXd outer(2 * M);
    outer << s.cwiseProduct(gs), gl;
    const Eigen::VectorXd pulled = inner_jacobian(u, lambda, task, spec, config).transpose() * outer;
    g.u += pulled.head(M);
    g.lambda += pulled.tail(M);
  }
  if (!g.u.allFinite() || !g.lambda.allFinite()) {
    std::ostringstream os;
    os << "meta_gradient: non-finite meta-gradient [" << g.u.transpose() << " | "
       << g.lambda.transpose() << "]";
    throw NumericalError(os.str());
  }
  return g;
}

Eigen::VectorXd meta_gd_step(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                             const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config) {
  const MetaGradient g = meta_gradient(u, lambda, tasks, spec, config);
  return u + config.meta_eta(tasks.size()) * g.u;
}

Eigen::VectorXd meta_eg_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& u,
                             const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config) {
  const MetaGradient g = meta_gradient(u, lambda, tasks, spec, config);
  return apply_eg<double>(lambda, g.lambda, config.meta_gamma(tasks.size()), config.grad_clip);
}

MetaResult maml_train(const TaskSet& tasks, const RiskSpec& spec, const MetaConfig& config) {
  tasks.validate();
  spec.validate();
  config.validate();
  MetaResult res;
  res.u = config.u_init ? *config.u_init : random_init(config.layers, config.init_seed);
  res.lambda = config.lambda_init ? *config.lambda_init : uniform_simplex(config.layers);
  const double eta_bar = config.meta_eta(tasks.size());
  const double gamma_bar = config.meta_gamma(tasks.size());
  res.objective.reserve(config.meta_iters);
  for (int it = 0; it < config.meta_iters; ++it) {
    const MetaGradient g = meta_gradient(res.u, res.lambda, tasks, spec, config);
    res.objective.push_back(g.objective);
    res.u += eta_bar * g.u;
    res.lambda = apply_eg<double>(res.lambda, g.lambda, gamma_bar, config.grad_clip);
    if (!res.u.allFinite()) throw NumericalError("maml_train: u diverged");
  }
  return res;
}

OptimResult fine_tune(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                      const GainDataset& data, const RiskSpec& spec, const MetaConfig& meta,
                      OptimConfig optim, bool continue_alg1) {
  const auto a = inner_adapt(u, lambda, data, spec, meta.eta, meta.gamma, meta.grad_clip);
  if (!continue_alg1) {
    OptimResult res;
    res.alloc.s = a.u.array().exp();
    res.alloc.lambda = a.lambda;
    const Eigen::VectorXd s = res.alloc.s;
    res.trace.objective.push_back(
        surrogate_objective<double>(s, a.lambda, data, spec, SurrogateTarget::cvar));
    res.trace.iterations = 1;
    return res;
  }
  optim.layers = static_cast<int>(u.size());
  optim.u_init = a.u;
  optim.lambda_init = a.lambda / a.lambda.sum();
  return optimize(data, spec, optim);
}

}  // namespace ldmcvar
