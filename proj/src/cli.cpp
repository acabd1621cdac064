#include "ldmcvar/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ldmcvar/error.hpp"
#include "ldmcvar/harness.hpp"
#include "ldmcvar/io.hpp"
#include "ldmcvar/meta.hpp"
#include "ldmcvar/theory.hpp"

namespace ldmcvar {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string trace;
  std::string data;
  std::string alloc;
  std::string format;  // empty: csv for experiment, json elsewhere
  std::optional<std::uint64_t> seed;
  std::optional<double> power_db;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<double> s_bound;
  std::optional<std::size_t> n;
  std::optional<int> m;
};

Json config_or_empty(const Options& o) {
  return o.config.empty() ? Json::object() : read_json_file(o.config);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParameterError(std::string(what) + " config: unknown key '" + key + "'");
  }
}

RiskSpec risk_from(const Json& cfg, const Options& o) {
  RiskSpec spec = cfg.contains("risk") ? risk_spec_from_json(cfg.at("risk")) : RiskSpec{};
  if (o.beta) spec.beta = *o.beta;
  if (o.power_db) spec.power = db_to_linear(*o.power_db);
  if (o.s_bound) spec.norm_bound = *o.s_bound;
  spec.validate();
  return spec;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw ParameterError("cannot write " + o.out);
  f << text;
}

void write_trace(const Options& o, const OptimTrace& trace) {
  if (o.trace.empty()) return;
  std::ofstream f(o.trace);
  if (!f) throw ParameterError("cannot write " + o.trace);
  write_trace_csv(f, trace);
}

std::string allocation_text(const LayerAllocation& a, const std::string& format) {
  std::ostringstream os;
  if (format == "csv") {
    os << "layer,s,lambda\n";
    for (int m = 0; m < a.layers(); ++m)
      os << m + 1 << ',' << format_double(a.s[m]) << ',' << format_double(a.lambda[m]) << '\n';
  } else {
    os << allocation_to_json(a).dump(2) << '\n';
  }
  return os.str();
}

int cmd_optimize(const Options& o) {
  const Json cfg = config_or_empty(o);
  check_keys(cfg, {"model", "risk", "optim", "n", "data"}, "optimize");
  const RiskSpec spec = risk_from(cfg, o);
  OptimConfig oc = cfg.contains("optim") ? optim_config_from_json(cfg.at("optim")) : OptimConfig{};
  if (o.m) {
    oc.layers = *o.m;
    if (oc.u_init && oc.u_init->size() != *o.m) oc.u_init.reset();
    if (oc.lambda_init && oc.lambda_init->size() != *o.m) oc.lambda_init.reset();
  }
  if (o.seed) oc.init_seed = *o.seed;
  oc.validate();

  GainDataset data;
  std::string path = o.data;
  if (path.empty() && cfg.contains("data")) path = cfg.at("data").get<std::string>();
  if (!path.empty()) {
    data = read_gains_csv(std::filesystem::path(path));
  } else if (cfg.contains("model")) {
    const std::size_t n = o.n ? *o.n : cfg.value("n", std::size_t{1000});
    data = sample_gains(model_from_json(cfg.at("model")), n, o.seed.value_or(1));
  } else {
    throw ParameterError("optimize: give --data or a config with a model");
  }
  const OptimResult res = optimize(data, spec, oc);
  write_trace(o, res.trace);
  emit(o, allocation_text(res.alloc, o.format));
  return 0;
}

int cmd_meta_train(const Options& o) {
  const Json cfg = config_or_empty(o);
  check_keys(cfg, {"risk", "meta", "tasks"}, "meta-train");
  const RiskSpec spec = risk_from(cfg, o);
  MetaConfig mc = cfg.contains("meta") ? meta_config_from_json(cfg.at("meta")) : MetaConfig{};
  if (o.m) {
    mc.layers = *o.m;
    mc.u_init.reset();
    mc.lambda_init.reset();
  }
  if (o.seed) mc.init_seed = *o.seed;
  mc.validate();
  TaskSet tasks;
  if (!o.data.empty()) tasks = load_tasks_from_dir(o.data);
  else if (cfg.contains("tasks")) tasks = tasks_from_json(cfg.at("tasks"));
  else throw ParameterError("meta-train: give --data <task dir> or a config with tasks");
  const MetaResult res = maml_train(tasks, spec, mc);
  OptimTrace trace;
  trace.objective = res.objective;
  trace.iterations = static_cast<int>(res.objective.size());
  write_trace(o, trace);
  emit(o, allocation_text({res.u.array().exp(), res.lambda}, o.format));
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Json cfg = config_or_empty(o);
  check_keys(cfg, {"allocation", "model", "risk", "holdout"}, "evaluate");
  const RiskSpec spec = risk_from(cfg, o);
  LayerAllocation alloc;
  if (!o.alloc.empty()) alloc = allocation_from_json(read_json_file(o.alloc));
  else if (cfg.contains("allocation")) alloc = allocation_from_json(cfg.at("allocation"));
  else throw ParameterError("evaluate: give --alloc or a config with an allocation");

  RiskReport rep;
  if (!o.data.empty()) {
    rep = evaluate(alloc, read_gains_csv(std::filesystem::path(o.data)), spec);
  } else if (cfg.contains("model")) {
    const FadingModel model = model_from_json(cfg.at("model"));
    const std::size_t holdout = o.n ? *o.n : cfg.value("holdout", std::size_t{0});
    rep = holdout > 0 ? evaluate_holdout(alloc, model, spec, holdout, o.seed.value_or(1))
                      : evaluate(alloc, model, spec);
  } else {
    throw ParameterError("evaluate: give --data or a config with a model");
  }
  emit(o, o.format == "csv" ? report_csv_header() + "\n" + report_csv_row(rep) + "\n"
                            : report_to_json(rep).dump(2) + "\n");
  return 0;
}

int cmd_bound(const Options& o) {
  if (!o.n) throw ParameterError("bound: --n is required");
  const double delta = o.delta.value_or(0.05);
  const double beta = o.beta.value_or(1.0);
  const double S = o.s_bound.value_or(10.0);
  const double P = db_to_linear(o.power_db.value_or(20.0));
  const BoundReport rep = bound_report(*o.n, delta, beta, S, P);
  Json j = {{"n", rep.n},           {"delta", rep.delta},         {"beta", rep.beta},
            {"s_bound", rep.s_bound}, {"power", rep.power},       {"bound_value", rep.bound_value},
            {"expected_rate_gap", expected_rate_gap_bound(*o.n, delta, S, P)},
            {"ccdf_deviation", ccdf_deviation_bound(*o.n, delta)}};
  if (o.format == "csv") {
    std::ostringstream os;
    os << "n,delta,beta,s_bound,power,bound_value\n"
       << rep.n << ',' << format_double(rep.delta) << ',' << format_double(rep.beta) << ','
       << format_double(rep.s_bound) << ',' << format_double(rep.power) << ','
       << format_double(rep.bound_value) << '\n';
    emit(o, os.str());
  } else {
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_baseline(const Options& o) {
  const Json cfg = config_or_empty(o);
  check_keys(cfg, {"model", "power_db"}, "baseline");
  const FadingModel model = cfg.contains("model") ? model_from_json(cfg.at("model")) : FadingModel(Rayleigh{1.0});
  const double P = db_to_linear(o.power_db.value_or(cfg.value("power_db", 20.0)));
  const InfiniteLayerSolution sol = infinite_layer_rate(model, P);
  Json j = {{"u0", sol.u0},
            {"u1", sol.u1},
            {"expected_rate", sol.expected_rate},
            {"quadrature_error_estimate", sol.quadrature_error_estimate},
            {"model", model_to_json(model)},
            {"power", P}};
  if (const auto* r = std::get_if<Rayleigh>(&model.kind))
    j["closed_form"] = rayleigh_closed_form(P, r->var);
  if (o.format == "csv") {
    emit(o, "u0,u1,expected_rate,quadrature_error_estimate\n" + format_double(sol.u0) + ',' +
                format_double(sol.u1) + ',' + format_double(sol.expected_rate) + ',' +
                format_double(sol.quadrature_error_estimate) + '\n');
  } else {
    emit(o, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_experiment(const Options& o) {
  if (o.config.empty()) throw ParameterError("experiment: --config is required");
  ExperimentSpec spec = experiment_spec_from_json(read_json_file(o.config));
  if (o.seed) spec.base_seed = *o.seed;
  if (o.power_db) spec.risk.power = db_to_linear(*o.power_db);
  if (o.beta) spec.risk.beta = *o.beta;
  if (o.n) spec.n = *o.n;
  if (o.m) spec.layers = *o.m;
  spec.validate();
  const auto rows = run_experiment(spec);
  std::ostringstream os;
  if (o.format == "json") {
    Json arr = Json::array();
    for (const auto& r : rows)
      arr.push_back({{"sweep", r.sweep}, {"mean", r.mean}, {"stderr", r.stderr_}, {"reps", r.reps}});
    os << arr.dump(2) << '\n';
  } else {
    write_results_csv(os, rows);
  }
  emit(o, os.str());
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Layered-division-multiplexing rate allocation under the beta-CVaR criterion"};
  app.name("ldmcvar");
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "write output here instead of stdout");
    sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* opt = app.add_subcommand("optimize", "mirror ascent on a gain dataset; prints the allocation");
  add_common(opt);
  opt->add_option("--data", o.data, "gain CSV (header 'gain')");
  opt->add_option("--m", o.m, "number of layers");
  opt->add_option("--beta", o.beta, "tail fraction");
  opt->add_option("--power-db", o.power_db, "transmit SNR in dB");
  opt->add_option("--n", o.n, "samples drawn from the config model when --data is absent");
  opt->add_option("--trace", o.trace, "write iter,objective CSV here");

  auto* meta = app.add_subcommand("meta-train", "MAML over previous deployments");
  add_common(meta);
  meta->add_option("--data", o.data, "directory of per-task gain CSVs");
  meta->add_option("--m", o.m, "number of layers");
  meta->add_option("--beta", o.beta, "tail fraction");
  meta->add_option("--power-db", o.power_db, "transmit SNR in dB");
  meta->add_option("--trace", o.trace, "write iter,objective CSV here");

  auto* eval = app.add_subcommand("evaluate", "risk report of an allocation");
  add_common(eval);
  eval->add_option("--alloc", o.alloc, "allocation JSON file");
  eval->add_option("--data", o.data, "gain CSV for an empirical report");
  eval->add_option("--beta", o.beta, "tail fraction");
  eval->add_option("--power-db", o.power_db, "transmit SNR in dB");
  eval->add_option("--n", o.n, "holdout sample size (empirical report on fresh draws)");

  auto* bound = app.add_subcommand("bound", "optimality-gap bounds");
  add_common(bound);
  bound->add_option("--n", o.n, "number of samples");
  bound->add_option("--delta", o.delta, "confidence parameter");
  bound->add_option("--beta", o.beta, "tail fraction");
  bound->add_option("--s", o.s_bound, "norm bound S on the rate allocation");
  bound->add_option("--power-db", o.power_db, "transmit SNR in dB");

  auto* base = app.add_subcommand("baseline", "infinite-layer known-distribution rate");
  add_common(base);
  base->add_option("--power-db", o.power_db, "transmit SNR in dB");

  auto* exp = app.add_subcommand("experiment", "seeded replication sweep; CSV sweep,mean,stderr,reps");
  add_common(exp);
  exp->add_option("--power-db", o.power_db, "transmit SNR in dB");
  exp->add_option("--beta", o.beta, "tail fraction");
  exp->add_option("--n", o.n, "dataset size");
  exp->add_option("--m", o.m, "number of layers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (opt->parsed()) return cmd_optimize(o);
    if (meta->parsed()) return cmd_meta_train(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (bound->parsed()) return cmd_bound(o);
    if (base->parsed()) return cmd_baseline(o);
    if (exp->parsed()) return cmd_experiment(o);
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  std::cerr << app.help();
  return 2;
}

}  // namespace ldmcvar
