#pragma once

// Seeded replication runner for the figure scenarios and custom sweeps.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ldmcvar/io.hpp"
#include "ldmcvar/meta.hpp"
#include "ldmcvar/optim.hpp"

namespace ldmcvar {

enum class Scenario { fig3, fig4, fig5, fig6, fig7, custom };
enum class EvalMode { analytic, holdout };

/// Which allocation a replication learns.
enum class Arm {
  optimize,  ///< mirror ascent from the configured init on one dataset
  maml,      ///< meta-trained init, adapted on the new deployment
  random,    ///< mirror ascent from a standard-normal init on the new deployment
};

/// Training objective for the optimize arm.
enum class Objective {
  cvar,    ///< surrogate CVaR at the configured beta
  mean,    ///< surrogate expected rate (beta = 1), evaluated at beta
  outage,  ///< surrogate outage rate at beta
};

struct ExperimentSpec {
  Scenario scenario = Scenario::custom;
  FadingModel model = Rayleigh{1.0};
  std::string sweep = "M";  ///< M, P_db, beta, N or D
  std::vector<double> values;
  int replications = 50;
  std::uint64_t base_seed = 1;
  EvalMode eval = EvalMode::analytic;
  std::size_t n_holdout = 100000;

  RiskSpec risk;
  OptimConfig optim;
  MetaConfig meta;

  std::size_t n = 1000;     ///< dataset size
  int layers = 6;
  Arm arm = Arm::optimize;
  Objective objective = Objective::cvar;
  /// Report metric(M) / metric(reference_layers) on the same dataset.
  bool ratio = false;
  int reference_layers = 1;

  std::size_t tasks = 10;          ///< D previous deployments
  std::size_t task_n = 0;          ///< samples per previous deployment; 0 means n
  double task_deviation_var = 2.0; ///< mu_tau ~ CN(0, var) added to the complex mean
  /// Run mirror ascent to convergence after the single adaptation step.
  bool continue_alg1 = true;

  unsigned threads = 0;  ///< 0: hardware concurrency; capped by CVAR_LDM_THREADS

  void validate() const;
};

/// Scenario defaults (model, grid, sizes, replications) before user overrides.
ExperimentSpec default_spec(Scenario scenario);
ExperimentSpec experiment_spec_from_json(const Json& j);

struct ResultRow {
  double sweep = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;  ///< NaN when reps < 2
  int reps = 0;
  double wall_seconds = 0.0;
};

/// Stable 64-bit mix of a seed with stream identifiers.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Worker count: `requested` (0 = hardware) capped by CVAR_LDM_THREADS.
unsigned worker_count(unsigned requested);

/// Metric of one replication at grid value `x`.
double run_replication(const ExperimentSpec& spec, double x, std::uint64_t seed);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);
void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);

/// Analytic report of `alloc` under a known model.
RiskReport evaluate(const LayerAllocation& alloc, const FadingModel& model, const RiskSpec& spec);
/// Empirical report of `alloc` over a dataset.
RiskReport evaluate(const LayerAllocation& alloc, const GainDataset& data, const RiskSpec& spec);
/// Empirical report over a fresh holdout sample of the model.
RiskReport evaluate_holdout(const LayerAllocation& alloc, const FadingModel& model,
                            const RiskSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace ldmcvar
