#pragma once

// Known-distribution infinite-layer baseline and the finite-sample gap bounds.

#include <cstddef>

#include "ldmcvar/fading.hpp"

namespace ldmcvar {

struct InfiniteLayerSolution {
  double u0 = 0.0;  ///< I(u0) = P
  double u1 = 0.0;  ///< I(u1) = 0
  double expected_rate = 0.0;  ///< bits
  double quadrature_error_estimate = 0.0;  ///< bits
};

/// Interference density I(u) = (Pr[g >= u] - u p(u)) / (u^2 p(u)).
double interference_density(const FadingModel& model, double u);
/// rho(u) = -dI/du, from the analytic density derivative.
double power_density(const FadingModel& model, double u);

/// Continuum-of-layers expected rate by root finding and adaptive quadrature.
/// Throws UnsupportedModel for mixtures or when no bracket is found.
InfiniteLayerSolution infinite_layer_rate(const FadingModel& model, double power);

/// Same quantity for Rayleigh fading through the exponential integral.
double rayleigh_closed_form(double power, double var = 1.0);

struct BoundReport {
  std::size_t n = 0;
  double delta = 0.05;
  double beta = 1.0;
  double s_bound = 10.0;
  double power = 100.0;
  double bound_value = 0.0;  ///< CVaR gap bound (expected-rate bound at beta = 1)
};

/// 4 sqrt((2N+1) ln(N+1) / (3N(N+1))) + sqrt(2 ln(2/delta) / N).
double deviation_bracket(std::size_t n, double delta);
double expected_rate_gap_bound(std::size_t n, double delta, double s_bound, double power);
double cvar_gap_bound(std::size_t n, double delta, double beta, double s_bound, double power);
/// Uniform CCDF deviation bound, clamped to 1.
double ccdf_deviation_bound(std::size_t n, double delta);
BoundReport bound_report(std::size_t n, double delta, double beta, double s_bound, double power);

/// Smallest N >= 3 with N / ln N >= (log2(S P) / (beta eps))^2.
std::size_t sample_complexity(double epsilon, double beta, double s_bound, double power);

}  // namespace ldmcvar
