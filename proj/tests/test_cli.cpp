#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ldmcvar/cli.hpp"
#include "ldmcvar/io.hpp"

using namespace ldmcvar;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> store = {"ldmcvar"};
  store.insert(store.end(), args);
  std::vector<char*> argv;
  for (auto& s : store) argv.push_back(s.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str() + err.str()};
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ldmcvar_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("baseline and bound print JSON") {
  const Run b = run({"baseline", "--power-db", "20"});
  REQUIRE(b.code == 0);
  CHECK(std::abs(Json::parse(b.out)["expected_rate"].get<double>() - 3.97659973760885) < 1e-6);
  const Run g = run({"bound", "--n", "100", "--delta", "0.05", "--beta", "1", "--s", "10", "--power-db", "20"});
  REQUIRE(g.code == 0);
  CHECK(Json::parse(g.out)["bound_value"].get<double>() == doctest::Approx(19.366475913279));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"baseline", "--bogus"}).code == 2);
  CHECK(run({"nosuchcommand"}).code == 2);
  CHECK(run({"optimize", "--data", "/nonexistent/gains.csv"}).code == 2);
  CHECK(run({"bound", "--n", "100", "--delta", "3"}).code == 2);
  CHECK(run({"baseline", "--format", "xml"}).code == 2);
}

TEST_CASE("optimize then evaluate through files") {
  const auto dir = scratch_dir();
  {
    std::ofstream f(dir / "gains.csv");
    write_gains_csv(f, sample_gains(Rayleigh{1.0}, 200, 1));
  }
  const std::string alloc = (dir / "alloc.json").string();
  const std::string trace = (dir / "trace.csv").string();
  const Run o = run({"optimize", "--data", (dir / "gains.csv").string(), "--m", "2", "--beta", "0.2",
                     "--power-db", "20", "--out", alloc, "--trace", trace});
  REQUIRE(o.code == 0);
  std::ifstream t(trace);
  std::string header;
  std::getline(t, header);
  CHECK(header == "iter,objective");
  const LayerAllocation a = allocation_from_json(read_json_file(alloc));
  CHECK(a.layers() == 2);

  const Run e = run({"evaluate", "--alloc", alloc, "--data", (dir / "gains.csv").string(), "--beta", "0.2",
                     "--power-db", "20", "--format", "csv"});
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind(report_csv_header(), 0) == 0);
}

TEST_CASE("experiment writes the sweep CSV") {
  const auto dir = scratch_dir();
  {
    std::ofstream f(dir / "exp.json");
    f << R"({"scenario":"fig3","sweep":{"var":"M","values":[1,2]},"n":30,"replications":2})";
  }
  const Run r = run({"experiment", "--config", (dir / "exp.json").string(), "--seed", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("sweep,mean,stderr,reps\n", 0) == 0);
  CHECK(run({"experiment", "--config", (dir / "exp.json").string(), "--seed", "5"}).out == r.out);
}

}
