#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = stripwet::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("critical-point prints JSON") {
  const Result r = call({"critical-point", "--law", "pq:p=0.3", "--a", "1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["beta_c"].get<double>() - 0.121704242345430630) < 1e-6);
  CHECK(j["refinement_delta"].get<double>() < 1e-6);
}

TEST_CASE("pq-exact constants") {
  const Result r = call({"pq-exact", "--p", "0.3", "--json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["sumK"].get<double>() == doctest::Approx(0.7));
  CHECK(j["rho_M1"].get<double>() == doctest::Approx(0.885410196624968454));
  const Result text = call({"pq-exact", "--p", "0.3"});
  CHECK(text.out.find("beta_c_1=0.121704242345") != std::string::npos);
}

TEST_CASE("bad invocations exit with code 2") {
  CHECK(call({"pq-z", "--p", "0.3", "--beta", "0.1", "--N", "5", "--bogus"}).code == 2);
  CHECK(call({"simulate", "--law", "pq:p=0.3", "--beta", "0.2", "--N", "10"}).code == 2);
  CHECK(call({"critical-point", "--law", "pq:p=0.9"}).code == 2);
  CHECK(call({"critical-point", "--law", "pq:p=0.3", "--a", "1.5"}).code == 2);
  CHECK(call({"pq-z", "--config", "/nonexistent.cfg"}).code == 2);
  const Result both = call({"simulate", "--law", "pq:p=0.3", "--beta", "0.2", "--beta-offset", "0.1", "--seed", "1"});
  CHECK(both.code == 2);
  CHECK_FALSE(both.err.empty());
}

TEST_CASE("seeded runs are reproducible") {
  const std::vector<std::string> args{"simulate", "--law", "pq:p=0.3", "--a",     "1",      "--beta", "0.4",
                                      "--N",      "64",    "--paths",  "50", "--seed", "12"};
  const Result a = call(args);
  const Result b = call(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("path,last_contact,L_A,R_A,contacts,sup,end_height", 0) == 0);
  auto other = args;
  other.back() = "13";
  CHECK(call(other).out != a.out);
}

TEST_CASE("pq-z matches enumeration") {
  const Result r = call({"pq-z", "--p", "0.3", "--a", "1", "--beta", "0.5", "--N", "10", "--boundary", "constrained"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(2.05479616859578268).epsilon(1e-11));
}

TEST_CASE("config files are overridden by flags") {
  const auto file = std::filesystem::temp_directory_path() / "stripwet_unit.cfg";
  {
    std::ofstream f(file);
    f << "# pq-z settings\np = 0.2\na=1\nbeta=0.5\nN=10\nboundary=constrained\n";
  }
  const Result from_file = call({"pq-z", "--config", file.string()});
  const Result direct = call({"pq-z", "--p", "0.2", "--a", "1", "--beta", "0.5", "--N", "10", "--boundary", "constrained"});
  const Result override = call({"pq-z", "--config", file.string(), "--p", "0.3"});
  std::filesystem::remove(file);
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out == direct.out);
  CHECK(std::stod(override.out) == doctest::Approx(2.05479616859578268).epsilon(1e-11));
}
