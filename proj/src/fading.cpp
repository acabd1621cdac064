#include "ldmcvar/fading.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// 2 g / var is noncentral chi-square with 2 degrees of freedom and
// noncentrality 2 nu^2 / var.
boost::math::non_central_chi_squared rician_chi2(const Rician& r) {
  return boost::math::non_central_chi_squared(2.0, 2.0 * r.nu * r.nu / r.var);
}

}  // namespace

void FadingModel::validate() const {
  std::visit(overloaded{
                 [](const Rayleigh& r) {
                   if (!(r.var > 0.0) || !std::isfinite(r.var))
                     throw ParameterError("rayleigh: variance must be positive");
                 },
                 [](const Rician& r) {
                   if (!(r.var > 0.0) || !std::isfinite(r.var))
                     throw ParameterError("rician: variance must be positive");
                   if (!(r.nu >= 0.0) || !std::isfinite(r.nu))
                     throw ParameterError("rician: nu must be a nonnegative magnitude");
                 },
                 [](const Mixture& m) {
                   if (m.parts.empty()) throw ParameterError("mixture: no components");
                   double total = 0.0;
                   for (const auto& p : m.parts) {
                     if (!(p.weight >= 0.0)) throw ParameterError("mixture: negative weight");
                     total += p.weight;
                     p.model.validate();
                   }
                   if (std::abs(total - 1.0) > 1e-12)
                     throw ParameterError("mixture: weights must sum to 1");
                 },
             },
             kind);
}

double FadingModel::mean_gain() const {
  return std::visit(overloaded{
                        [](const Rayleigh& r) { return r.var; },
                        [](const Rician& r) { return r.nu * r.nu + r.var; },
                        [](const Mixture& m) {
                          double acc = 0.0;
                          for (const auto& p : m.parts) acc += p.weight * p.model.mean_gain();
                          return acc;
                        },
                    },
                    kind);
}

std::string FadingModel::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Rayleigh& r) { os << "rayleigh(var=" << r.var << ")"; },
                 [&](const Rician& r) { os << "rician(nu=" << r.nu << ",var=" << r.var << ")"; },
                 [&](const Mixture& m) {
                   os << "mixture[";
                   for (std::size_t i = 0; i < m.parts.size(); ++i) {
                     if (i) os << ",";
                     os << m.parts[i].weight << "*" << m.parts[i].model.describe();
                   }
                   os << "]";
                 },
             },
             kind);
  return os.str();
}

GainDataset::GainDataset(std::vector<double> gains, std::uint64_t seed)
    : gains_(std::move(gains)), seed_(seed) {
  if (gains_.empty()) throw ParameterError("gain dataset must be nonempty");
  for (double g : gains_) {
    if (!(g >= 0.0) || !std::isfinite(g))
      throw ParameterError("gains must be finite and nonnegative");
  }
  std::sort(gains_.begin(), gains_.end());
}

double GainDataset::order_stat(std::size_t i) const {
  if (i < 1 || i > gains_.size()) throw ParameterError("order statistic index out of range");
  return gains_[i - 1];
}

double GainDataset::empirical_ccdf(double t) const {
  return static_cast<double>(count_at_least(t, gains_.size())) /
         static_cast<double>(gains_.size());
}

std::size_t GainDataset::count_at_least(double t, std::size_t prefix) const {
  prefix = std::min(prefix, gains_.size());
  const auto end = gains_.begin() + static_cast<std::ptrdiff_t>(prefix);
  return static_cast<std::size_t>(end - std::lower_bound(gains_.begin(), end, t));
}

namespace {

std::complex<double> draw_coefficient(const FadingModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::visit(
      overloaded{
          [&](const Rayleigh& r) {
            const double sd = std::sqrt(r.var / 2.0);
            const double re = normal(rng);
            const double im = normal(rng);
            return std::complex<double>(sd * re, sd * im);
          },
          [&](const Rician& r) {
            const double sd = std::sqrt(r.var / 2.0);
            const double re = normal(rng);
            const double im = normal(rng);
            return std::complex<double>(r.nu + sd * re, sd * im);
          },
          [&](const Mixture& m) {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            double pick = unif(rng);
            for (const auto& p : m.parts) {
              if (pick < p.weight) return draw_coefficient(p.model, rng);
              pick -= p.weight;
            }
            return draw_coefficient(m.parts.back().model, rng);
          },
      },
      model.kind);
}

}  // namespace

GainDataset sample_gains(const FadingModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample_gains: n must be positive");
  model.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> gains(n);
  for (auto& g : gains) g = std::norm(draw_coefficient(model, rng));
  return GainDataset(std::move(gains), seed);
}

double ccdf(const FadingModel& model, double t) {
  if (t <= 0.0) return 1.0;
  return std::visit(overloaded{
                        [&](const Rayleigh& r) { return std::exp(-t / r.var); },
                        [&](const Rician& r) {
                          if (r.nu == 0.0) return std::exp(-t / r.var);
                          const double x = 2.0 * t / r.var;
                          return boost::math::cdf(boost::math::complement(rician_chi2(r), x));
                        },
                        [&](const Mixture& m) {
                          double acc = 0.0;
                          for (const auto& p : m.parts) acc += p.weight * ccdf(p.model, t);
                          return acc;
                        },
                    },
                    model.kind);
}

double pdf(const FadingModel& model, double t) {
  if (t < 0.0) return 0.0;
  return std::visit(overloaded{
                        [&](const Rayleigh& r) { return std::exp(-t / r.var) / r.var; },
                        [&](const Rician& r) {
                          // (1/var) exp(-(t + nu^2)/var) I0(2 nu sqrt(t) / var), with the
                          // exponentially scaled Bessel product kept finite for large arguments.
                          const double z = 2.0 * r.nu * std::sqrt(t) / r.var;
                          const double base = -(t + r.nu * r.nu) / r.var;
                          if (z < 600.0)
                            return std::exp(base) * std::cyl_bessel_i(0.0, z) / r.var;
                          const double log_i0 = z - 0.5 * std::log(2.0 * M_PI * z) +
                                                std::log1p(1.0 / (8.0 * z));
                          return std::exp(base + log_i0) / r.var;
                        },
                        [&](const Mixture& m) {
                          double acc = 0.0;
                          for (const auto& p : m.parts) acc += p.weight * pdf(p.model, t);
                          return acc;
                        },
                    },
                    model.kind);
}

double pdf_derivative(const FadingModel& model, double t) {
  return std::visit(
      overloaded{
          [&](const Rayleigh& r) { return -std::exp(-t / r.var) / (r.var * r.var); },
          [&](const Rician& r) {
            if (r.nu == 0.0 || t <= 0.0) {
              // I0(z) = 1 + nu^2 t / var^2 + O(t^2) near the origin.
              const double e = std::exp(-(t + r.nu * r.nu) / r.var) / r.var;
              return e * (-1.0 / r.var + r.nu * r.nu / (r.var * r.var));
            }
            const double sq = std::sqrt(t);
            const double z = 2.0 * r.nu * sq / r.var;
            const double dz = r.nu / (r.var * sq);
            const double e = std::exp(-(t + r.nu * r.nu) / r.var) / r.var;
            return e * (-std::cyl_bessel_i(0.0, z) / r.var + std::cyl_bessel_i(1.0, z) * dz);
          },
          [&](const Mixture& m) {
            double acc = 0.0;
            for (const auto& p : m.parts) acc += p.weight * pdf_derivative(p.model, t);
            return acc;
          },
      },
      model.kind);
}

double quantile(const FadingModel& model, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("quantile: p must lie in [0,1)");
  if (p == 0.0) return 0.0;
  const double target = 1.0 - p;
  double lo = 0.0;
  double hi = std::max(model.mean_gain(), 1e-12);
  while (ccdf(model, hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("quantile: bracket diverged");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ccdf(model, mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace ldmcvar
