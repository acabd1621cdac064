#include "ldmcvar/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

namespace {

bool integral_sweep(const std::string& var) { return var == "M" || var == "N" || var == "D"; }

std::vector<double> range(double first, double last, double step) {
  std::vector<double> v;
  for (double x = first; x <= last + 1e-9; x += step) v.push_back(x);
  return v;
}

const FadingModel& require_rician(const FadingModel& model) {
  if (!std::holds_alternative<Rician>(model.kind))
    throw ParameterError("maml/random arms need a rician deployment model");
  return model;
}

}  // namespace

void ExperimentSpec::validate() const {
  model.validate();
  risk.validate();
  if (replications < 1) throw ParameterError("experiment: replications must be >= 1");
  if (values.empty()) throw ParameterError("experiment: sweep grid is empty");
  if (sweep != "M" && sweep != "P_db" && sweep != "beta" && sweep != "N" && sweep != "D")
    throw ParameterError("experiment: unknown sweep variable '" + sweep + "'");
  for (double x : values) {
    if (!std::isfinite(x)) throw ParameterError("experiment: non-finite sweep value");
    if (integral_sweep(sweep) && (x < 1.0 || x != std::floor(x)))
      throw ParameterError("experiment: " + sweep + " values must be positive integers");
    if (sweep == "beta" && !(x > 0.0 && x <= 1.0))
      throw ParameterError("experiment: beta values must lie in (0, 1]");
  }
  if (n == 0) throw ParameterError("experiment: n must be positive");
  if (layers < 1 || reference_layers < 1) throw ParameterError("experiment: layers must be >= 1");
  if (eval == EvalMode::holdout && n_holdout < 100000)
    throw ParameterError("experiment: holdout evaluation needs n_holdout >= 100000");
  if (arm != Arm::optimize) {
    require_rician(model);
    if (ratio) throw ParameterError("experiment: ratio applies to the optimize arm only");
    if (objective != Objective::cvar)
      throw ParameterError("experiment: maml/random arms train the cvar objective");
  }
  if (arm == Arm::maml && (tasks == 0 || !(task_deviation_var >= 0.0)))
    throw ParameterError("experiment: maml needs tasks >= 1 and a nonnegative deviation variance");
  meta.validate();
}

ExperimentSpec default_spec(Scenario scenario) {
  ExperimentSpec s;
  s.scenario = scenario;
  s.risk.power = 100.0;
  switch (scenario) {
    case Scenario::fig3:
      s.model = Rayleigh{1.0};
      s.sweep = "M";
      s.values = range(1, 6, 1);
      s.n = 1000;
      s.replications = 50;
      s.risk.beta = 1.0;
      break;
    case Scenario::fig4:
      s.model = Rayleigh{1.0};
      s.sweep = "P_db";
      s.values = range(0, 40, 5);
      s.n = 10000;
      s.layers = 6;
      s.ratio = true;
      s.replications = 20;
      s.risk.beta = 1.0;
      break;
    case Scenario::fig5:
      s.model = Rician{2.0, 1.0};
      s.sweep = "beta";
      s.values = {0.0005, 0.001, 0.005, 0.01, 0.03, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0};
      s.n = 10000;
      s.layers = 6;
      s.replications = 20;
      break;
    case Scenario::fig6:
      s.model = Rician{std::sqrt(10.0), 5.0};
      s.sweep = "N";
      s.values = {1, 2, 3, 4, 6, 9, 13, 18, 26, 38, 55, 78, 113, 162, 234, 336, 483, 695, 1000};
      s.layers = 6;
      s.risk.beta = 0.1;
      s.arm = Arm::maml;
      s.continue_alg1 = false;
      s.replications = 30;
      break;
    case Scenario::fig7:
      s.model = Rician{std::sqrt(10.0), 5.0};
      s.sweep = "D";
      s.values = range(2, 26, 2);
      s.n = 10;
      s.layers = 6;
      s.risk.beta = 0.1;
      s.arm = Arm::maml;
      s.continue_alg1 = false;
      s.replications = 30;
      break;
    case Scenario::custom:
      s.values = {static_cast<double>(s.layers)};
      break;
  }
  return s;
}

namespace {

template <typename E>
E enum_from(const Json& j, const char* key, std::initializer_list<std::pair<const char*, E>> table) {
  const auto s = j.at(key).get<std::string>();
  for (const auto& [name, e] : table)
    if (s == name) return e;
  throw ParameterError(std::string("experiment: bad value '") + s + "' for " + key);
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ParameterError("experiment: config must be a JSON object");
  static const std::set<std::string> known = {
      "scenario", "model", "sweep", "replications", "seed", "eval", "risk", "optim", "meta",
      "n", "layers", "arm", "objective", "ratio", "reference_layers", "tasks", "task_n",
      "task_deviation_var", "continue", "threads"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ParameterError("experiment: unknown key '" + key + "'");
  try {
    Scenario sc = Scenario::custom;
    if (j.contains("scenario"))
      sc = enum_from<Scenario>(j, "scenario",
                               {{"fig3", Scenario::fig3}, {"fig4", Scenario::fig4},
                                {"fig5", Scenario::fig5}, {"fig6", Scenario::fig6},
                                {"fig7", Scenario::fig7}, {"custom", Scenario::custom}});
    ExperimentSpec s = default_spec(sc);
    if (j.contains("model")) s.model = model_from_json(j.at("model"));
    if (j.contains("sweep")) {
      const Json& sw = j.at("sweep");
      if (!sw.is_object() || !sw.contains("var") || !sw.contains("values"))
        throw ParameterError("experiment: sweep needs 'var' and 'values'");
      s.sweep = sw.at("var").get<std::string>();
      s.values = sw.at("values").get<std::vector<double>>();
    }
    if (j.contains("replications")) s.replications = j.at("replications").get<int>();
    if (j.contains("seed")) s.base_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("eval")) {
      const Json& ev = j.at("eval");
      if (ev.contains("mode"))
        s.eval = enum_from<EvalMode>(ev, "mode",
                                     {{"analytic", EvalMode::analytic}, {"holdout", EvalMode::holdout}});
      if (ev.contains("n_holdout")) s.n_holdout = ev.at("n_holdout").get<std::size_t>();
    }
    if (j.contains("risk")) s.risk = risk_spec_from_json(j.at("risk"), s.risk);
    if (j.contains("optim")) s.optim = optim_config_from_json(j.at("optim"), s.optim);
    if (j.contains("meta")) s.meta = meta_config_from_json(j.at("meta"), s.meta);
    if (j.contains("n")) s.n = j.at("n").get<std::size_t>();
    if (j.contains("layers")) s.layers = j.at("layers").get<int>();
    if (j.contains("arm"))
      s.arm = enum_from<Arm>(j, "arm",
                             {{"optimize", Arm::optimize}, {"maml", Arm::maml}, {"random", Arm::random}});
    if (j.contains("objective"))
      s.objective = enum_from<Objective>(
          j, "objective",
          {{"cvar", Objective::cvar}, {"mean", Objective::mean}, {"outage", Objective::outage}});
    if (j.contains("ratio")) s.ratio = j.at("ratio").get<bool>();
    if (j.contains("reference_layers")) s.reference_layers = j.at("reference_layers").get<int>();
    if (j.contains("tasks")) s.tasks = j.at("tasks").get<std::size_t>();
    if (j.contains("task_n")) s.task_n = j.at("task_n").get<std::size_t>();
    if (j.contains("task_deviation_var")) s.task_deviation_var = j.at("task_deviation_var").get<double>();
    if (j.contains("continue")) s.continue_alg1 = j.at("continue").get<bool>();
    if (j.contains("threads")) s.threads = j.at("threads").get<unsigned>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("experiment: ") + e.what());
  }
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer applied to each word in turn.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

unsigned worker_count(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CVAR_LDM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

RiskReport evaluate(const LayerAllocation& alloc, const FadingModel& model, const RiskSpec& spec) {
  return analytic_report(alloc, model, spec);
}

RiskReport evaluate(const LayerAllocation& alloc, const GainDataset& data, const RiskSpec& spec) {
  return empirical_report(alloc, data, spec);
}

RiskReport evaluate_holdout(const LayerAllocation& alloc, const FadingModel& model,
                            const RiskSpec& spec, std::size_t n, std::uint64_t seed) {
  RiskReport rep = empirical_report(alloc, sample_gains(model, n, seed), spec);
  rep.oracle = "holdout";
  return rep;
}

double run_replication(const ExperimentSpec& base, double x, std::uint64_t seed) {
  ExperimentSpec s = base;
  if (s.sweep == "M") s.layers = static_cast<int>(x);
  else if (s.sweep == "P_db") s.risk.power = db_to_linear(x);
  else if (s.sweep == "beta") s.risk.beta = x;
  else if (s.sweep == "N") s.n = static_cast<std::size_t>(x);
  else if (s.sweep == "D") s.tasks = static_cast<std::size_t>(x);

  const std::uint64_t data_seed = mix_seed(seed, 1);
  const std::uint64_t init_seed = mix_seed(seed, 2);
  const std::uint64_t holdout_seed = mix_seed(seed, 3);

  auto metric = [&](const LayerAllocation& alloc) {
    return s.eval == EvalMode::analytic
               ? analytic_cvar(alloc, s.model, s.risk)
               : evaluate_holdout(alloc, s.model, s.risk, s.n_holdout, holdout_seed).cvar_rate;
  };

  const GainDataset data = sample_gains(s.model, s.n, data_seed);

  if (s.arm == Arm::optimize) {
    RiskSpec train = s.risk;
    if (s.objective == Objective::mean) train.beta = 1.0;
    auto learn = [&](int layers) {
      OptimConfig c = s.optim;
      c.layers = layers;
      c.init_seed = init_seed;
      c.target = s.objective == Objective::outage ? SurrogateTarget::outage : SurrogateTarget::cvar;
      return optimize(data, train, c).alloc;
    };
    const double value = metric(learn(s.layers));
    if (!s.ratio) return value;
    const double ref = metric(learn(s.reference_layers));
    if (!(ref > 0.0)) throw NumericalError("reference allocation has zero rate; ratio undefined");
    return value / ref;
  }

  OptimConfig c = s.optim;
  c.layers = s.layers;
  if (s.arm == Arm::random) {
    c.init = InitMode::random;
    c.init_seed = init_seed;
    return metric(optimize(data, s.risk, c).alloc);
  }

  // Previous deployments: the complex line-of-sight mean shifted by mu_tau.
  const auto& dep = std::get<Rician>(s.model.kind);
  std::mt19937_64 rng(mix_seed(seed, 5));
  std::normal_distribution<double> normal(0.0, std::sqrt(s.task_deviation_var / 2.0));
  std::vector<FadingModel> models;
  std::vector<std::uint64_t> seeds;
  for (std::size_t t = 0; t < s.tasks; ++t) {
    const double re = normal(rng);
    const double im = normal(rng);
    models.push_back(Rician{std::abs(std::complex<double>(dep.nu + re, im)), dep.var});
    seeds.push_back(mix_seed(seed, 4, t));
  }
  const TaskSet tasks = sample_tasks(models, s.task_n != 0 ? s.task_n : s.n, seeds);
  MetaConfig mc = s.meta;
  mc.layers = s.layers;
  mc.init_seed = init_seed;
  const MetaResult init = maml_train(tasks, s.risk, mc);
  return metric(fine_tune(init.u, init.lambda, data, s.risk, mc, c, s.continue_alg1).alloc);
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t G = spec.values.size();
  const std::size_t R = static_cast<std::size_t>(spec.replications);
  std::vector<double> value(G * R, 0.0);
  std::vector<double> seconds(G * R, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < G * R; job = next++) {
      const std::size_t g = job / R;
      const std::size_t r = job % R;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        value[job] = run_replication(spec, spec.values[g], mix_seed(spec.base_seed, g, r));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = G * R;
      }
      seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const unsigned n_workers = std::min<std::size_t>(worker_count(spec.threads), G * R);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRow> rows;
  for (std::size_t g = 0; g < G; ++g) {
    ResultRow row;
    row.sweep = spec.values[g];
    row.reps = static_cast<int>(R);
    double sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      sum += value[g * R + r];
      row.wall_seconds += seconds[g * R + r];
    }
    row.mean = sum / static_cast<double>(R);
    if (R >= 2) {
      double ss = 0.0;
      for (std::size_t r = 0; r < R; ++r) ss += std::pow(value[g * R + r] - row.mean, 2);
      row.stderr_ = std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R));
    } else {
      row.stderr_ = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "sweep,mean,stderr,reps\n";
  for (const auto& r : rows)
    os << format_double(r.sweep) << ',' << format_double(r.mean) << ',' << format_double(r.stderr_)
       << ',' << r.reps << '\n';
}

}  // namespace ldmcvar
