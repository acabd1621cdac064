#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "ldmcvar/harness.hpp"

using namespace ldmcvar;

TEST_SUITE("harness") {

TEST_CASE("seed mixing separates streams") {
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 4, 0) != mix_seed(1, 4, 1));
  CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}

TEST_CASE("thread cap from the environment") {
  ::setenv("CVAR_LDM_THREADS", "1", 1);
  CHECK(worker_count(8) == 1);
  ::unsetenv("CVAR_LDM_THREADS");
  CHECK(worker_count(3) == 3);
}

TEST_CASE("results are byte-identical across runs and thread counts") {
  ExperimentSpec spec = default_spec(Scenario::fig3);
  spec.values = {1, 2};
  spec.n = 50;
  spec.replications = 4;
  spec.threads = 1;
  std::ostringstream a, b;
  write_results_csv(a, run_experiment(spec));
  spec.threads = 3;
  write_results_csv(b, run_experiment(spec));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("sweep,mean,stderr,reps\n", 0) == 0);
}

TEST_CASE("single replication reports a NaN standard error") {
  ExperimentSpec spec = default_spec(Scenario::fig3);
  spec.values = {1};
  spec.n = 20;
  spec.replications = 1;
  const auto rows = run_experiment(spec);
  CHECK(std::isnan(rows[0].stderr_));
  CHECK(rows[0].reps == 1);
}

TEST_CASE("spec parsing") {
  const ExperimentSpec s = experiment_spec_from_json(Json::parse(
      R"({"scenario":"fig5","sweep":{"var":"beta","values":[0.5]},"replications":2,"objective":"mean"})"));
  CHECK(s.sweep == "beta");
  CHECK(s.values == std::vector<double>{0.5});
  CHECK(s.replications == 2);
  CHECK(s.objective == Objective::mean);
  CHECK(s.n == 10000);
  CHECK_THROWS(experiment_spec_from_json(Json::parse(R"({"scenario":"fig9"})")));
  CHECK_THROWS(experiment_spec_from_json(Json::parse(R"({"replications":0})")));
  CHECK_THROWS(experiment_spec_from_json(Json::parse(R"({"bogus":1})")));
}

TEST_CASE("holdout evaluation approaches the analytic value") {
  LayerAllocation a;
  a.s = Eigen::Vector2d(0.1, 0.4);
  a.lambda = Eigen::Vector2d(0.6, 0.4);
  RiskSpec spec;
  spec.beta = 0.2;
  const RiskReport an = evaluate(a, Rayleigh{1.0}, spec);
  const RiskReport ho = evaluate_holdout(a, Rayleigh{1.0}, spec, 200000, 3);
  CHECK(ho.oracle == "holdout");
  CHECK(std::abs(ho.cvar_rate - an.cvar_rate) < 0.01 * an.cvar_rate);
}

TEST_CASE("shipped experiment configs parse") {
  for (const char* name : {"fig3", "fig4", "fig4_m2", "fig5_cvar", "fig5_mean", "fig6_maml", "fig6_random", "fig7"}) {
    CAPTURE(name);
    const auto path = std::filesystem::path(LDMCVAR_CONFIG_DIR) / (std::string(name) + ".json");
    CHECK_NOTHROW(experiment_spec_from_json(read_json_file(path)).validate());
  }
}

}
