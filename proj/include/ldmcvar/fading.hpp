#pragma once

// Channel-gain distributions. A fading coefficient h is drawn from the model
// and a client sees the gain g = |h|^2.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ldmcvar {

/// h ~ CN(0, var): exponential gain with mean var.
struct Rayleigh {
  double var = 1.0;
};

/// h ~ CN(mean, var) with |mean| = nu: scaled noncentral chi-square gain.
struct Rician {
  double nu = 0.0;
  double var = 1.0;
};

struct MixturePart;

struct Mixture {
  std::vector<MixturePart> parts;
};

struct FadingModel {
  std::variant<Rayleigh, Rician, Mixture> kind;

  FadingModel() = default;
  FadingModel(Rayleigh r) : kind(r) {}       // NOLINT
  FadingModel(Rician r) : kind(r) {}         // NOLINT
  FadingModel(Mixture m) : kind(std::move(m)) {}  // NOLINT

  /// Throws ParameterError if any variance is nonpositive or mixture weights
  /// are negative or do not sum to one within 1e-12.
  void validate() const;

  /// Mean gain E[g].
  double mean_gain() const;

  std::string describe() const;
};

struct MixturePart {
  double weight = 0.0;
  FadingModel model;
};

/// Sorted multiset of nonnegative gains plus the seed that produced it.
class GainDataset {
 public:
  GainDataset() = default;
  /// Sorts the input. Throws ParameterError if empty or any gain is negative/non-finite.
  explicit GainDataset(std::vector<double> gains, std::uint64_t seed = 0);

  std::span<const double> gains() const { return gains_; }
  std::size_t size() const { return gains_.size(); }
  /// 1-based order statistic g_[i].
  double order_stat(std::size_t i) const;
  double operator[](std::size_t i) const { return gains_[i]; }
  std::uint64_t seed() const { return seed_; }

  /// Fraction of gains >= t.
  double empirical_ccdf(double t) const;
  /// Number of gains among the smallest `prefix` that are >= t.
  std::size_t count_at_least(double t, std::size_t prefix) const;

 private:
  std::vector<double> gains_;
  std::uint64_t seed_ = 0;
};

GainDataset sample_gains(const FadingModel& model, std::size_t n, std::uint64_t seed);

/// Pr[g >= t].
double ccdf(const FadingModel& model, double t);
/// Density of g at t.
double pdf(const FadingModel& model, double t);
/// d pdf / dt, analytic for every supported kind.
double pdf_derivative(const FadingModel& model, double t);
/// Smallest t with ccdf(t) <= 1 - p, by bracketing bisection.
double quantile(const FadingModel& model, double p);

}  // namespace ldmcvar
