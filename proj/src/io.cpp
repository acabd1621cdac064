#include "ldmcvar/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ldmcvar/error.hpp"

namespace ldmcvar {

namespace {

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ParameterError(std::string(what) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ParameterError(std::string(what) + ": unknown key '" + key + "'");
}

template <typename T>
T get(const Json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
void maybe(const Json& j, const char* key, T& out, const char* what) {
  if (j.contains(key)) out = get<T>(j, key, what);
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw ParameterError(std::string(what) + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParameterError(std::string(what) + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json model_to_json(const FadingModel& model) {
  if (const auto* r = std::get_if<Rayleigh>(&model.kind)) return {{"kind", "rayleigh"}, {"var", r->var}};
  if (const auto* r = std::get_if<Rician>(&model.kind))
    return {{"kind", "rician"}, {"nu", r->nu}, {"var", r->var}};
  const auto& m = std::get<Mixture>(model.kind);
  Json parts = Json::array();
  for (const auto& p : m.parts) parts.push_back(Json::array({p.weight, model_to_json(p.model)}));
  return {{"kind", "mixture"}, {"parts", parts}};
}

FadingModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ParameterError("model: missing 'kind'");
  const auto kind = get<std::string>(j, "kind", "model");
  FadingModel model;
  if (kind == "rayleigh") {
    require_keys(j, {"kind", "var"}, "rayleigh model");
    Rayleigh r;
    maybe(j, "var", r.var, "rayleigh model");
    model = r;
  } else if (kind == "rician") {
    require_keys(j, {"kind", "nu", "var"}, "rician model");
    Rician r;
    r.nu = get<double>(j, "nu", "rician model");
    maybe(j, "var", r.var, "rician model");
    model = r;
  } else if (kind == "mixture") {
    require_keys(j, {"kind", "parts"}, "mixture model");
    const Json& parts = j.at("parts");
    if (!parts.is_array()) throw ParameterError("mixture model: 'parts' must be an array");
    Mixture m;
    for (const auto& p : parts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number())
        throw ParameterError("mixture model: each part must be [weight, model]");
      m.parts.push_back({p[0].get<double>(), model_from_json(p[1])});
    }
    model = m;
  } else if (kind == "atom" || kind == "point") {
    throw UnsupportedModel("model: point-mass components are not supported");
  } else {
    throw ParameterError("model: unknown kind '" + kind + "'");
  }
  model.validate();
  return model;
}

void write_gains_csv(std::ostream& os, const GainDataset& data) {
  os << "gain\n";
  for (double g : data.gains()) os << format_double(g) << '\n';
}

GainDataset read_gains_csv(std::istream& is, std::uint64_t seed) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("gain csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "gain") throw ParameterError("gain csv: header must be 'gain'");
  std::vector<double> gains;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double g = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), g);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size())
      throw ParameterError("gain csv: bad value on line " + std::to_string(lineno));
    gains.push_back(g);
  }
  return GainDataset(std::move(gains), seed);
}

GainDataset read_gains_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  return read_gains_csv(in);
}

Json allocation_to_json(const LayerAllocation& alloc) {
  return {{"s", vector_to_json(alloc.s)}, {"lambda", vector_to_json(alloc.lambda)}};
}

LayerAllocation allocation_from_json(const Json& j) {
  require_keys(j, {"s", "lambda"}, "allocation");
  if (!j.contains("s") || !j.contains("lambda"))
    throw ParameterError("allocation: needs 's' and 'lambda'");
  LayerAllocation a{vector_from_json(j.at("s"), "allocation s"),
                    vector_from_json(j.at("lambda"), "allocation lambda")};
  a.validate();
  return a;
}

Json report_to_json(const RiskReport& rep) {
  return {{"mean_rate", rep.mean_rate}, {"outage_rate", rep.outage_rate},
          {"cvar_rate", rep.cvar_rate}, {"beta", rep.beta},
          {"n_used", rep.n_used},       {"oracle", rep.oracle}};
}

std::string report_csv_header() { return "mean_rate,outage_rate,cvar_rate,beta,n_used,oracle"; }

std::string report_csv_row(const RiskReport& rep) {
  std::ostringstream os;
  os << format_double(rep.mean_rate) << ',' << format_double(rep.outage_rate) << ','
     << format_double(rep.cvar_rate) << ',' << format_double(rep.beta) << ',' << rep.n_used << ','
     << rep.oracle;
  return os.str();
}

RiskSpec risk_spec_from_json(const Json& j, RiskSpec base) {
  require_keys(j, {"beta", "c", "power", "power_db", "norm_bound", "tail_rule"}, "risk spec");
  maybe(j, "beta", base.beta, "risk spec");
  maybe(j, "c", base.c, "risk spec");
  maybe(j, "power", base.power, "risk spec");
  if (j.contains("power_db")) base.power = db_to_linear(get<double>(j, "power_db", "risk spec"));
  maybe(j, "norm_bound", base.norm_bound, "risk spec");
  if (j.contains("tail_rule")) {
    const auto r = get<std::string>(j, "tail_rule", "risk spec");
    if (r == "ceiling") base.tail_rule = TailRule::ceiling;
    else if (r == "nearest") base.tail_rule = TailRule::nearest;
    else throw ParameterError("risk spec: tail_rule must be 'ceiling' or 'nearest'");
  }
  base.validate();
  return base;
}

OptimConfig optim_config_from_json(const Json& j, OptimConfig base) {
  require_keys(j,
               {"layers", "eta", "gamma", "max_iters", "rel_tol", "grad_clip", "init", "init_seed",
                "u_init", "lambda_init", "gauss_seidel", "target"},
               "optim config");
  maybe(j, "layers", base.layers, "optim config");
  maybe(j, "eta", base.eta, "optim config");
  maybe(j, "gamma", base.gamma, "optim config");
  maybe(j, "max_iters", base.max_iters, "optim config");
  maybe(j, "rel_tol", base.rel_tol, "optim config");
  maybe(j, "grad_clip", base.grad_clip, "optim config");
  maybe(j, "init_seed", base.init_seed, "optim config");
  maybe(j, "gauss_seidel", base.gauss_seidel, "optim config");
  if (j.contains("init")) {
    const auto s = get<std::string>(j, "init", "optim config");
    if (s == "quantile") base.init = InitMode::quantile;
    else if (s == "random") base.init = InitMode::random;
    else throw ParameterError("optim config: init must be 'quantile' or 'random'");
  }
  if (j.contains("target")) {
    const auto s = get<std::string>(j, "target", "optim config");
    if (s == "cvar") base.target = SurrogateTarget::cvar;
    else if (s == "outage") base.target = SurrogateTarget::outage;
    else throw ParameterError("optim config: target must be 'cvar' or 'outage'");
  }
  if (j.contains("u_init")) base.u_init = vector_from_json(j.at("u_init"), "optim config u_init");
  if (j.contains("lambda_init"))
    base.lambda_init = vector_from_json(j.at("lambda_init"), "optim config lambda_init");
  base.validate();
  return base;
}

MetaConfig meta_config_from_json(const Json& j, MetaConfig base) {
  require_keys(j,
               {"eta_bar", "gamma_bar", "eta", "gamma", "meta_iters", "jacobian_mode", "fd_step",
                "grad_clip", "layers", "init_seed"},
               "meta config");
  if (j.contains("eta_bar")) base.eta_bar = get<double>(j, "eta_bar", "meta config");
  if (j.contains("gamma_bar")) base.gamma_bar = get<double>(j, "gamma_bar", "meta config");
  maybe(j, "eta", base.eta, "meta config");
  maybe(j, "gamma", base.gamma, "meta config");
  maybe(j, "meta_iters", base.meta_iters, "meta config");
  maybe(j, "fd_step", base.fd_step, "meta config");
  maybe(j, "grad_clip", base.grad_clip, "meta config");
  maybe(j, "layers", base.layers, "meta config");
  maybe(j, "init_seed", base.init_seed, "meta config");
  if (j.contains("jacobian_mode")) {
    const auto s = get<std::string>(j, "jacobian_mode", "meta config");
    if (s == "exact") base.jacobian_mode = JacobianMode::exact;
    else if (s == "finite-difference") base.jacobian_mode = JacobianMode::finite_difference;
    else if (s == "first-order") base.jacobian_mode = JacobianMode::first_order;
    else throw ParameterError("meta config: unknown jacobian_mode '" + s + "'");
  }
  base.validate();
  return base;
}

void write_trace_csv(std::ostream& os, const OptimTrace& trace) {
  os << "iter,objective\n";
  for (std::size_t i = 0; i < trace.objective.size(); ++i)
    os << i << ',' << format_double(trace.objective[i]) << '\n';
}

TaskSet load_tasks_from_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParameterError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  TaskSet ts;
  for (const auto& f : files) ts.tasks.push_back(read_gains_csv(f));
  ts.validate();
  return ts;
}

TaskSet tasks_from_json(const Json& j) {
  require_keys(j, {"n", "tasks"}, "task set");
  const auto n = get<std::size_t>(j, "n", "task set");
  if (!j.contains("tasks") || !j.at("tasks").is_array())
    throw ParameterError("task set: 'tasks' must be an array");
  std::vector<FadingModel> models;
  std::vector<std::uint64_t> seeds;
  for (const auto& t : j.at("tasks")) {
    require_keys(t, {"model", "seed"}, "task");
    models.push_back(model_from_json(t.at("model")));
    seeds.push_back(get<std::uint64_t>(t, "seed", "task"));
  }
  if (n == 0) throw ParameterError("task set: n must be positive");
  return sample_tasks(models, n, seeds);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

}  // namespace ldmcvar
