#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qpencil/cli.hpp"
#include "qpencil/problems.hpp"

using namespace qpencil;
using nlohmann::json;

namespace {

const std::string kFixtures = QPENCIL_FIXTURES;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qpencil");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qpencil_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("golden fixtures match the registry coefficients") {
  for (const std::string name : {"example1", "example2", "example3", "example4"}) {
    CAPTURE(name);
    std::ifstream in(kFixtures + "/" + name + ".json");
    REQUIRE(in);
    json fx;
    in >> fx;
    const auto p = builtin_problem(name);
    const int n = fx.at("n").get<int>();
    CHECK(p.n() == n);
    CHECK(p.coeffs.delta() == doctest::Approx(fx.at("delta").get<double>()));
    CHECK(p.domain_name() == fx.at("domain").at("kind").get<std::string>());
    if (p.is_half_line()) {
      CHECK((p.boundary().c - matrix_from_json(fx["domain"]["c"], n, "c")).norm() == 0.0);
      CHECK((p.boundary().C2 - matrix_from_json(fx["domain"]["C2"], n, "C2")).norm() == 0.0);
    }
    for (const auto& s : fx.at("samples")) {
      const double x = s.at("x").get<double>();
      CAPTURE(x);
      const auto c = p.coeffs(x);
      const CMatrix V = matrix_from_json(s.at("V"), n, "V");
      CHECK((c.V - V).norm() <= 1e-12 * std::max(1.0, V.norm()));
      CHECK((c.f1 - matrix_from_json(s.at("f1"), n, "f1")).norm() == 0.0);
      CHECK((c.f2 - matrix_from_json(s.at("f2"), n, "f2")).norm() == 0.0);
    }
  }
}

TEST_CASE("check subcommand") {
  const auto ok = run({"check", "--problem", "example1"});
  CHECK(ok.code == 0);
  CHECK(ok.doc().at("ok").get<bool>());

  const auto bad = run({"check", "--problem", kFixtures + "/positive_limit.json"});
  CHECK(bad.code == kExitAssumption);
  CHECK(bad.doc().at("verdicts").at("A1") == "violated");

  const auto broken = run({"check", "--problem", kFixtures + "/malformed.json"});
  CHECK(broken.code == kExitConfig);
  CHECK(broken.err.find("malformed.json") != std::string::npos);
}

TEST_CASE("count subcommand") {
  const auto r1 = run({"count", "--problem", "example1", "--lambda", "0"});
  REQUIRE(r1.code == 0);
  const auto d1 = r1.doc();
  CHECK(d1.at("N") == 0);
  CHECK(d1.at("maslov") == 1);
  CHECK(d1.at("morse") == 1);

  const auto r4 = run({"count", "--problem", "example4", "--lambda", "0"});
  REQUIRE(r4.code == 0);
  CHECK(r4.doc().at("N") == 5);

  const auto r2 = run({"count", "--problem", "example2", "--lambda", "0", "--oracle"});
  REQUIRE(r2.code == 0);
  CHECK(r2.doc().at("N") == 3);
  CHECK(r2.doc().at("oracle_count") == 3);
}

TEST_CASE("count on a tabulated problem file") {
  const auto r = run({"count", "--problem", kFixtures + "/example2_table.json", "--lambda", "0", "--oracle"});
  REQUIRE(r.code == 0);
  CHECK(r.doc().at("N") == 3);
  CHECK(r.doc().at("oracle_count") == 3);
}

TEST_CASE("count output is deterministic") {
  const auto a = run({"count", "--problem", "random-whole:7", "--lambda", "0"});
  const auto b = run({"count", "--problem", "random-whole:7", "--lambda", "0"});
  CHECK(a.out == b.out);
}

TEST_CASE("curves subcommand") {
  const auto path = temp_path("curves2.csv");
  const auto r = run({"curves", "--problem", "example2", "--points", "11", "--out", path.string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(path);
  CHECK(csv.rfind("lambda,strand_index,x_star\n", 0) == 0);
  CHECK(csv.find("\n0,2,") != std::string::npos);

  const auto empty = temp_path("curves_const.csv");
  REQUIRE(run({"curves", "--problem", "constant", "--points", "5", "--out", empty.string()}).code == 0);
  CHECK(slurp(empty) == "lambda,strand_index,x_star\n");
  std::filesystem::remove(path);
  std::filesystem::remove(empty);
}

TEST_CASE("box subcommand") {
  const auto csv = temp_path("box2.csv");
  const auto r = run({"box", "--problem", "example2", "--csv", csv.string()});
  REQUIRE(r.code == 0);
  const auto d = r.doc();
  CHECK(d.at("box_sum") == 0);
  CHECK(d.at("shelves").at("top").at("maslov") == 3);
  CHECK(d.at("shelves").at("left").at("maslov") == -3);
  CHECK(slurp(csv).rfind("shelf,maslov,crossing_params\n", 0) == 0);
  std::filesystem::remove(csv);

  const auto r1 = run({"box", "--problem", "example1"});
  CHECK(r1.code == 0);
  CHECK(r1.doc().at("box_sum") == 0);

  const auto deg = run({"box", "--problem", "example2", "--lambda-lo", "0.2", "--lambda-hi", "0.2"});
  REQUIRE(deg.code == 0);
  for (const auto& [name, shelf] : deg.doc().at("shelves").items()) CHECK(shelf.at("maslov") == 0);
}

TEST_CASE("oracle subcommand") {
  const auto r = run({"oracle", "--problem", "example2", "--lambda", "0", "--doubling-audit"});
  REQUIRE(r.code == 0);
  const auto d = r.doc();
  CHECK(d.at("method") == "fd-scan");
  CHECK(d.at("oracle_count") == 3);
  CHECK(d.at("doubled_count") == 3);
  CHECK(d.at("doubling_stable") == true);
}

TEST_CASE("exit codes") {
  CHECK(run({"count", "--problem", "no-such-problem"}).code == kExitConfig);
  CHECK(run({"count"}).code == kExitConfig);
  CHECK(run({"count", "--problem", "example1", "--rel-tol", "-1"}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);

  // Nonlinear phi cannot be read from JSON, and expression coefficients are not implemented.
  const auto phi = temp_path("phi.json");
  {
    json j = json::parse(slurp(kFixtures + "/positive_limit.json"));
    j["domain"]["phi"] = "-lambda - lambda^2";
    std::ofstream(phi) << j.dump();
  }
  CHECK(run({"oracle", "--problem", phi.string()}).code == kExitUnsupported);
  const auto expr = temp_path("expr.json");
  std::ofstream(expr) << R"({"n": 1, "coefficients": {"kind": "expr", "V": "-1"}})";
  CHECK(run({"count", "--problem", expr.string()}).code == kExitUnsupported);
  std::filesystem::remove(phi);
  std::filesystem::remove(expr);

  CHECK(exit_code_for(ErrorKind::InconsistentBox) == kExitInconsistentBox);
  CHECK(exit_code_for(ErrorKind::HyperbolicityLost) == kExitAssumption);
  CHECK(exit_code_for(ErrorKind::UnsupportedBoundary) == kExitUnsupported);
  CHECK(exit_code_for(ErrorKind::Config) == kExitConfig);
}
