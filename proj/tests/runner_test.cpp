#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "netlab/experiments.hpp"
#include "netlab/runner.hpp"

using namespace netlab;
namespace fs = std::filesystem;

namespace {

Json short_tcp() {
  Json j = default_scenario("tcp_rlc");
  j["slots"] = 2000;
  return j;
}

int cli(const std::string& args) {
  std::string cmd = std::string(NETLAB_CLI) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("netlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("parallel batch equals serial batch") {
  auto scen = sweep_scenarios(short_tcp(), "paths", {"1", "2", "4", "8"});
  Json mob = default_scenario("mobility");
  mob["minutes"] = 300;
  scen.push_back(mob);
  auto a = run_batch_serial(scen);
  auto b = run_batch(scen, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].run_id == b[i].run_id);
    CHECK(a[i].metrics.to_csv() == b[i].metrics.to_csv());
    CHECK(a[i].summary == b[i].summary);
  }
  CHECK(a[2].run_id == "tcp_rlc/paths=4");
}

TEST_CASE("batch rethrows a failing run") {
  auto scen = sweep_scenarios(short_tcp(), "paths", {"2", "0"});
  CHECK_THROWS(run_batch(scen, 2));
}

TEST_CASE("single-value sweep equals a run") {
  Json base = short_tcp();
  auto one = sweep_scenarios(base, "paths", {"8"});
  auto r = run_scenario(base);
  auto s = run_batch_serial(one);
  CHECK(s[0].summary == r.summary);
}

TEST_CASE("experiment ids") {
  CHECK(experiment_from_key("4") == 4);
  CHECK(experiment_from_key("mobility-exp1") == 1);
  CHECK(experiment_from_key("determinism") == 11);
  CHECK_THROWS_AS(experiment_from_key("unknown-id"), ScenarioError);
  CHECK(experiment_ids().size() == 11);
}

TEST_CASE("cli exit codes") {
  const std::string dir = NETLAB_SCENARIOS;
  auto out = scratch("cli");
  CHECK(cli("validate --scenario " + dir + "/tcp_multipath.json") == 0);
  CHECK(cli("run --scenario " + dir + "/tcp_multipath.json --set slots=0 --out " + out.string()) == 0);
  std::ifstream f(out / "metrics.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "run_id,t,metric,subject,value");
  CHECK(fs::exists(out / "summary.json"));

  CHECK(cli("run --scenario " + dir + "/tcp_multipath.json --set nope=1") == 2);
  CHECK(cli("run --scenario " + dir + "/tcp_multipath.json --set paths=0") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("reproduce unknown-id") == 2);

  fs::path bad = out / "bad.json";
  std::ofstream(bad) << "{\"model\": \"icn\", \"horizon\": \"soon\"}";
  CHECK(cli("validate --scenario " + bad.string()) == 2);
}

TEST_CASE("cli run is deterministic and sweep writes one directory per value") {
  const std::string dir = NETLAB_SCENARIOS;
  auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "run --scenario " + dir + "/mobility_exp1.json --set minutes=200 --seed 5 --out ";
  REQUIRE(cli(args + a.string()) == 0);
  REQUIRE(cli(args + b.string()) == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "metrics.csv").size() > 100);

  auto s = scratch("sweep");
  REQUIRE(cli("sweep --scenario " + dir + "/tcp_multipath.json --set slots=500 --key paths --values 1,2 --parallel 2 --out " +
              s.string()) == 0);
  CHECK(fs::exists(s / "paths=1" / "metrics.csv"));
  CHECK(fs::exists(s / "paths=2" / "summary.json"));
  CHECK(fs::exists(s / "summary.csv"));
}
