#include <doctest.h>

#include <sstream>

#include "ldmcvar/error.hpp"
#include "ldmcvar/io.hpp"

using namespace ldmcvar;

TEST_SUITE("io") {

TEST_CASE("fading models round-trip") {
  const Json mix = Json::parse(R"({"kind":"mixture","parts":[[0.25,{"kind":"rayleigh","var":2.0}],[0.75,{"kind":"rician","nu":2.0,"var":1.0}]]})");
  const FadingModel m = model_from_json(mix);
  CHECK(model_to_json(m) == mix);
  CHECK(model_to_json(model_from_json(Json::parse(R"({"kind":"rayleigh","var":1.0})"))) ==
        Json::parse(R"({"kind":"rayleigh","var":1.0})"));
  CHECK_THROWS_AS(model_from_json(Json::parse(R"({"kind":"atom","at":1.0})")), UnsupportedModel);
  CHECK_THROWS_AS(model_from_json(Json::parse(R"({"kind":"rayleigh","var":1.0,"extra":2})")), ParameterError);
  CHECK_THROWS_AS(model_from_json(Json::parse(R"({"kind":"rayleigh","var":-1.0})")), ParameterError);
}

TEST_CASE("gain CSV round-trips exactly") {
  const GainDataset d = sample_gains(Rayleigh{1.0}, 50, 2);
  std::stringstream ss;
  write_gains_csv(ss, d);
  CHECK(ss.str().rfind("gain\n", 0) == 0);
  const GainDataset back = read_gains_csv(ss);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(back[i] == d[i]);

  std::istringstream bad("value\n1.0\n");
  CHECK_THROWS_AS(read_gains_csv(bad), ParameterError);
  std::istringstream junk("gain\n1.0\nabc\n");
  CHECK_THROWS_AS(read_gains_csv(junk), ParameterError);
}

TEST_CASE("allocations and reports") {
  LayerAllocation a;
  a.s = Eigen::Vector2d(0.1, 0.35);
  a.lambda = Eigen::Vector2d(0.7, 0.3);
  const LayerAllocation b = allocation_from_json(allocation_to_json(a));
  CHECK(b.s == a.s);
  CHECK(b.lambda == a.lambda);
  CHECK_THROWS_AS(allocation_from_json(Json::parse(R"({"s":[0.1],"lambda":[0.5,0.5]})")), ParameterError);

  RiskReport r{1.5, 1.25, 0.75, 0.1, 10, "empirical"};
  CHECK(report_csv_header() == "mean_rate,outage_rate,cvar_rate,beta,n_used,oracle");
  CHECK(report_csv_row(r) == "1.5,1.25,0.75,0.1,10,empirical");
  CHECK(report_to_json(r)["cvar_rate"] == 0.75);
}

TEST_CASE("config parsing") {
  const RiskSpec s = risk_spec_from_json(Json::parse(R"({"beta":0.2,"power_db":30})"));
  CHECK(s.beta == 0.2);
  CHECK(s.power == doctest::Approx(1000.0));
  CHECK_THROWS_AS(risk_spec_from_json(Json::parse(R"({"betta":0.2})")), ParameterError);
  const OptimConfig o = optim_config_from_json(Json::parse(R"({"layers":3,"eta":0.02})"));
  CHECK(o.layers == 3);
  CHECK(o.eta == 0.02);
  const MetaConfig m = meta_config_from_json(Json::parse(R"({"jacobian_mode":"first-order"})"));
  CHECK(m.jacobian_mode == JacobianMode::first_order);
  CHECK_THROWS_AS(meta_config_from_json(Json::parse(R"({"jacobian_mode":"sideways"})")), ParameterError);
}

TEST_CASE("trace CSV and task lists") {
  OptimTrace t;
  t.objective = {1.0, 1.5};
  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str() == "iter,objective\n0,1\n1,1.5\n");

  const TaskSet tasks = tasks_from_json(Json::parse(
      R"({"n":7,"tasks":[{"model":{"kind":"rayleigh","var":1.0},"seed":3},{"model":{"kind":"rician","nu":1.0,"var":1.0},"seed":4}]})"));
  CHECK(tasks.size() == 2);
  CHECK(tasks.tasks[1].size() == 7);
  CHECK(tasks.tasks[0][0] == sample_gains(Rayleigh{1.0}, 7, 3)[0]);
}

}
