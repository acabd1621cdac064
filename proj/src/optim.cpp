#include "ldmcvar/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

void OptimConfig::validate() const {
  if (layers < 1) throw ParameterError("optim: layers must be >= 1");
  if (!(eta >= 0.0) || !(gamma >= 0.0)) throw ParameterError("optim: steps must be nonnegative");
  if (max_iters < 0) throw ParameterError("optim: max_iters must be >= 0");
  if (!(rel_tol > 0.0)) throw ParameterError("optim: rel_tol must be positive");
  if (!(grad_clip > 0.0)) throw ParameterError("optim: grad_clip must be positive");
  if (u_init && u_init->size() != layers) throw ParameterError("optim: u_init has wrong length");
  if (lambda_init) {
    if (lambda_init->size() != layers) throw ParameterError("optim: lambda_init has wrong length");
    if ((lambda_init->array() <= 0.0).any())
      throw ParameterError("optim: lambda_init must be strictly positive");
    if (std::abs(lambda_init->sum() - 1.0) > 1e-9)
      throw ParameterError("optim: lambda_init must sum to 1");
  }
}

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "non-finite " << what << ": [" << v.transpose() << "]";
    throw NumericalError(os.str());
  }
}

RateGradient surrogate_grad(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                            const GainDataset& data, const RiskSpec& spec,
                            SurrogateTarget target) {
  RateGradient grad;
  const Eigen::VectorXd s = u.array().exp();
  surrogate_objective<double>(s, lambda, data, spec, target, &grad.s, &grad.lambda);
  return grad;
}

Eigen::VectorXd u_from_thresholds(const std::vector<double>& thresholds) {
  const int M = static_cast<int>(thresholds.size());
  const double top = std::max(thresholds.back(), 1e-12);
  // Keep every increment strictly positive so log(s) stays finite.
  const double floor = 1e-3 * top / M;
  Eigen::VectorXd u(M);
  double prev = 0.0;
  for (int m = 0; m < M; ++m) {
    const double inc = std::max(thresholds[m] - prev, floor);
    u[m] = std::log(inc);
    prev += inc;
  }
  return u;
}

}  // namespace

Eigen::VectorXd gd_step(const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                        const GainDataset& data, const RiskSpec& spec, double eta,
                        double grad_clip) {
  require_finite(u, "u");
  const RateGradient g = surrogate_grad(u, lambda, data, spec, SurrogateTarget::cvar);
  require_finite(g.s, "gradient w.r.t. s");
  return apply_gd<double>(u, g.s, eta, grad_clip);
}

Eigen::VectorXd eg_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& u,
                        const GainDataset& data, const RiskSpec& spec, double gamma,
                        double grad_clip) {
  if ((lambda.array() <= 0.0).any()) throw ParameterError("eg_step: lambda must be positive");
  const RateGradient g = surrogate_grad(u, lambda, data, spec, SurrogateTarget::cvar);
  require_finite(g.lambda, "gradient w.r.t. lambda");
  return apply_eg<double>(lambda, g.lambda, gamma, grad_clip);
}

Eigen::VectorXd quantile_init(const GainDataset& data, int layers, double beta) {
  const auto n = static_cast<double>(data.size());
  std::vector<double> t(layers);
  for (int m = 0; m < layers; ++m) {
    // Interior levels: a threshold at the sample maximum starts its layer dead.
    const double level = beta * (m + 1) / (layers + 1);
    const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(level * n), 1.0, n));
    t[m] = data.order_stat(idx);
  }
  return u_from_thresholds(t);
}

Eigen::VectorXd quantile_init(const FadingModel& model, int layers, double beta) {
  std::vector<double> t(layers);
  for (int m = 0; m < layers; ++m) t[m] = quantile(model, beta * (m + 1) / (layers + 1));
  return u_from_thresholds(t);
}

Eigen::VectorXd equal_increment_init(int layers, double top) {
  if (!(top > 0.0)) throw ParameterError("equal_increment_init: top threshold must be positive");
  return Eigen::VectorXd::Constant(layers, std::log(top / layers));
}

Eigen::VectorXd random_init(int layers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd u(layers);
  for (int m = 0; m < layers; ++m) u[m] = normal(rng);
  return u;
}

Eigen::VectorXd uniform_simplex(int layers) {
  return Eigen::VectorXd::Constant(layers, 1.0 / layers);
}

OptimResult mirror_ascent(const ObjectiveFn& objective, Eigen::VectorXd u,
                          Eigen::VectorXd lambda, const OptimConfig& config) {
  OptimResult res;
  RateGradient grad;
  auto eval = [&](RateGradient* g) {
    const Eigen::VectorXd s = u.array().exp();
    const double v = objective(s, lambda, g);
    if (!std::isfinite(v)) throw NumericalError("objective is not finite");
    return v;
  };

  double prev = eval(&grad);
  res.trace.objective.push_back(prev);
  for (int it = 1; it <= config.max_iters; ++it) {
    require_finite(grad.s, "gradient w.r.t. s");
    require_finite(grad.lambda, "gradient w.r.t. lambda");
    const Eigen::VectorXd u_next = apply_gd<double>(u, grad.s, config.eta, config.grad_clip);
    if (config.gauss_seidel) {
      const Eigen::VectorXd s_next = u_next.array().exp();
      RateGradient fresh;
      objective(s_next, lambda, &fresh);
      lambda = apply_eg<double>(lambda, fresh.lambda, config.gamma, config.grad_clip);
    } else {
      lambda = apply_eg<double>(lambda, grad.lambda, config.gamma, config.grad_clip);
    }
    u = u_next;
    require_finite(u, "u");

    const double cur = eval(&grad);
    res.trace.objective.push_back(cur);
    res.trace.iterations = it;
    if (std::abs(cur - prev) / std::max(1.0, std::abs(prev)) < config.rel_tol) {
      res.trace.converged = true;
      break;
    }
    prev = cur;
  }
  res.alloc.s = u.array().exp();
  res.alloc.lambda = lambda;
  return res;
}

OptimResult optimize(const GainDataset& data, const RiskSpec& spec, const OptimConfig& config) {
  spec.validate();
  config.validate();
  Eigen::VectorXd u = config.u_init ? *config.u_init
                      : config.init == InitMode::random
                          ? random_init(config.layers, config.init_seed)
                          : quantile_init(data, config.layers, spec.beta);
  Eigen::VectorXd lambda = config.lambda_init ? *config.lambda_init : uniform_simplex(config.layers);
  const SurrogateTarget target = config.target;
  ObjectiveFn f = [&data, &spec, target](const Eigen::VectorXd& s, const Eigen::VectorXd& l,
                                         RateGradient* g) {
    if (g == nullptr) return surrogate_objective<double>(s, l, data, spec, target);
    return surrogate_objective<double>(s, l, data, spec, target, &g->s, &g->lambda);
  };
  return mirror_ascent(f, std::move(u), std::move(lambda), config);
}

OptimResult optimize_known_distribution(const FadingModel& model, const RiskSpec& spec,
                                        const OptimConfig& config) {
  spec.validate();
  config.validate();
  model.validate();
  Eigen::VectorXd u = config.u_init ? *config.u_init
                      : config.init == InitMode::random
                          ? random_init(config.layers, config.init_seed)
                          : equal_increment_init(config.layers, model.mean_gain());
  Eigen::VectorXd lambda = config.lambda_init ? *config.lambda_init : uniform_simplex(config.layers);
  ObjectiveFn f = [&model, &spec](const Eigen::VectorXd& s, const Eigen::VectorXd& l,
                                  RateGradient* g) {
    const LayerAllocation a{s, l};
    if (g != nullptr) *g = analytic_mean_rate_grad(a, model, spec);
    return analytic_mean_rate(a, model, spec);
  };
  return mirror_ascent(f, std::move(u), std::move(lambda), config);
}

}  // namespace ldmcvar
