#include "ldmcvar/theory.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/tools/roots.hpp>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

double interference_density(const FadingModel& model, double u) {
  const double p = pdf(model, u);
  return (ccdf(model, u) - u * p) / (u * u * p);
}

double power_density(const FadingModel& model, double u) {
  const double p = pdf(model, u);
  const double dp = pdf_derivative(model, u);
  const double num = ccdf(model, u) - u * p;
  const double den = u * u * p;
  const double dnum = -2.0 * p - u * dp;
  const double dden = 2.0 * u * p + u * u * dp;
  return -(dnum * den - num * dden) / (den * den);
}

namespace {

double refine_root(const std::function<double(double)>& f, double lo, double hi) {
  boost::uintmax_t iters = 200;
  const auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

InfiniteLayerSolution infinite_layer_rate(const FadingModel& model, double power) {
  model.validate();
  if (!(power > 0.0)) throw ParameterError("infinite_layer_rate: power must be positive");
  if (std::holds_alternative<Mixture>(model.kind))
    throw UnsupportedModel("infinite_layer_rate: mixture models are not supported");

  auto I = [&](double u) { return interference_density(model, u); };
  // Scan a log grid for the first downward zero crossing of I, then for the
  // last crossing of I = P below it.
  const double lo = 1e-9 * model.mean_gain();
  const double hi = quantile(model, 1.0 - 1e-12);
  const int steps = 4000;
  const double ratio = std::pow(hi / lo, 1.0 / steps);
  double u1 = -1.0;
  double prev_u = lo;
  double prev_i = I(lo);
  for (int k = 1; k <= steps; ++k) {
    const double u = lo * std::pow(ratio, k);
    const double i = I(u);
    if (prev_i >= 0.0 && i < 0.0) {
      u1 = refine_root(I, prev_u, u);
      break;
    }
    prev_u = u;
    prev_i = i;
  }
  if (u1 < 0.0) throw UnsupportedModel("infinite_layer_rate: no root of I(u) = 0 found");

  auto excess = [&](double u) { return I(u) - power; };
  double u0 = -1.0;
  double right = u1;
  for (int k = 1; k <= steps; ++k) {
    const double left = u1 * std::pow(lo / u1, static_cast<double>(k) / steps);
    if (excess(left) >= 0.0) {
      u0 = refine_root(excess, left, right);
      break;
    }
    right = left;
  }
  if (u0 < 0.0) throw UnsupportedModel("infinite_layer_rate: no root of I(u) = P found");

  auto integrand = [&](double u) {
    return ccdf(model, u) * u * power_density(model, u) / (1.0 + u * I(u));
  };
  double err = 0.0;
  const double nats =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, u0, u1, 15, 1e-9, &err);
  InfiniteLayerSolution sol;
  sol.u0 = u0;
  sol.u1 = u1;
  sol.expected_rate = nats / std::numbers::ln2;
  sol.quadrature_error_estimate = err / std::numbers::ln2;
  return sol;
}

double rayleigh_closed_form(double power, double var) {
  if (!(power > 0.0)) throw ParameterError("rayleigh_closed_form: power must be positive");
  if (!(var > 0.0)) throw ParameterError("rayleigh_closed_form: variance must be positive");
  // A gain scale var is the same channel at power var * P.
  const double p = power * var;
  const double u0 = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * p));
  using boost::math::expint;
  const double nats =
      2.0 * (expint(1, u0) - expint(1, 1.0)) - (std::exp(-u0) - std::exp(-1.0));
  return nats / std::numbers::ln2;
}

double deviation_bracket(std::size_t n, double delta) {
  if (n == 0) throw ParameterError("bound: n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("bound: delta must lie in (0, 1]");
  const double N = static_cast<double>(n);
  return 4.0 * std::sqrt((2.0 * N + 1.0) * std::log(N + 1.0) / (3.0 * N * (N + 1.0))) +
         std::sqrt(2.0 * std::log(2.0 / delta) / N);
}

double expected_rate_gap_bound(std::size_t n, double delta, double s_bound, double power) {
  if (!(s_bound > 0.0) || !(power > 0.0)) throw ParameterError("bound: S and P must be positive");
  return deviation_bracket(n, delta) * 2.0 * std::log2(1.0 + s_bound * power);
}

double cvar_gap_bound(std::size_t n, double delta, double beta, double s_bound, double power) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("bound: beta must lie in (0, 1]");
  return expected_rate_gap_bound(n, delta, s_bound, power) / beta;
}

double ccdf_deviation_bound(std::size_t n, double delta) {
  return std::min(1.0, deviation_bracket(n, delta));
}

BoundReport bound_report(std::size_t n, double delta, double beta, double s_bound, double power) {
  BoundReport rep;
  rep.n = n;
  rep.delta = delta;
  rep.beta = beta;
  rep.s_bound = s_bound;
  rep.power = power;
  rep.bound_value = cvar_gap_bound(n, delta, beta, s_bound, power);
  return rep;
}

std::size_t sample_complexity(double epsilon, double beta, double s_bound, double power) {
  if (!(epsilon > 0.0)) throw ParameterError("sample_complexity: epsilon must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("sample_complexity: beta must lie in (0, 1]");
  if (!(s_bound > 0.0) || !(power > 0.0))
    throw ParameterError("sample_complexity: S and P must be positive");
  const double r = std::log2(s_bound * power) / (beta * epsilon);
  const double target = r * r;
  auto ok = [&](std::size_t n) {
    const double N = static_cast<double>(n);
    return N / std::log(N) >= target;
  };
  // N / ln N is increasing for N >= 3.
  std::size_t hi = 3;
  while (!ok(hi)) {
    if (hi > std::numeric_limits<std::size_t>::max() / 4)
      throw NumericalError("sample_complexity: target out of range");
    hi *= 2;
  }
  std::size_t lo = hi / 2 < 3 ? 3 : hi / 2;
  if (ok(lo)) return lo;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace ldmcvar
