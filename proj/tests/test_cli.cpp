#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

#include "fixtures.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string binPath() {
  const char* env = std::getenv("UNFO_BIN");
  return env ? env : "./unfo";
}

struct RunOut {
  int code = -1;
  std::string out;
};

RunOut run(const std::string& args) {
  std::string cmd = binPath() + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunOut r;
  char buf[4096];
  while (fgets(buf, sizeof buf, p)) r.out += buf;
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "unfo_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string put(const std::string& name, const std::string& text) {
  auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* KB_T =
    "sig { unary P; trans T; } facts { P(a); } "
    "tgd { P(x) -> E y. (T(x,y) & P(y)); } query { E x. T(x,x) }";
const char* KB_R =
    "sig { unary P; rel R/2; trans T; } facts { P(a); } "
    "tgd { P(x) -> E y. (R(x,y) & P(y)); } query { E x. R(x,x) }";

} // namespace

TEST_CASE("check maps the decision onto the exit code") {
  auto inf = put("f_inf.unfo", fixtures::F_INF);
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  CHECK(run("check " + inf).code == 1);
  CHECK(run("check " + cyc).code == 0);
}

TEST_CASE("json reports carry the contract fields") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto r = run("check " + cyc + " --json");
  CHECK(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("command") == "check");
  CHECK(j.at("status") == "sat");
  CHECK(j.at("exit") == 0);
  CHECK(j.at("elapsed_ms").get<long long>() >= 0);
  CHECK(j.contains("version"));
  CHECK(j.contains("seed"));

  auto inf = put("f_inf.unfo", fixtures::F_INF);
  auto j2 = json::parse(run("check " + inf + " --json").out);
  CHECK(j2.at("status") == "unsat");
  CHECK(j2.at("exit") == 1);
}

TEST_CASE("emitted certificates verify and convert to dot") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto cert = (scratch() / "cert.json").string();
  REQUIRE(run("check " + cyc + " --emit-cert " + cert).code == 0);
  CHECK(json::parse(slurp(cert)).at("kind") == "certificate");
  CHECK(run("verify-cert " + cyc + " " + cert).code == 0);

  auto dot = (scratch() / "cert.dot").string();
  CHECK(run("convert " + cert + " " + dot).code == 0);
  CHECK(slurp(dot).find("digraph") != std::string::npos);

  // a certificate for a different formula is rejected before verification
  auto inf = put("f_inf.unfo", fixtures::F_INF);
  CHECK(run("verify-cert " + inf + " " + cert).code >= 3);
}

TEST_CASE("bruteforce writes a model that model-check accepts") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto model = (scratch() / "model.out").string();
  CHECK(run("bruteforce " + cyc + " --max-n 4 --emit " + model).code == 0);
  CHECK(slurp(model).find("domain") == 0);
  CHECK(run("model-check " + cyc + " " + model).code == 0);

  auto inf = put("f_inf.unfo", fixtures::F_INF);
  CHECK(run("bruteforce " + inf + " --max-n 3").code == 1);
  // a structure violating a conjunct is flagged
  auto loop = put("loop.out", "domain 1\nT : (0,0)\n");
  CHECK(run("model-check " + inf + " " + loop).code == 1);
  // symbols outside the signature are an input error
  CHECK(run("model-check " + inf + " " + model).code >= 3);
}

TEST_CASE("normalize prints the matrix shapes") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto r = run("normalize " + cyc);
  CHECK(r.code == 0);
  CHECK(r.out.find("phi0") != std::string::npos);
  CHECK(r.out.find("conj0") != std::string::npos);
}

TEST_CASE("build-model emits a model that passes model-check") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto model = (scratch() / "built.out").string();
  CHECK(run("build-model " + cyc + " --emit " + model).code == 0);
  CHECK(run("model-check " + cyc + " " + model).code == 0);

  auto inf = put("f_inf.unfo", fixtures::F_INF);
  CHECK(run("build-model " + inf).code == 1);
}

TEST_CASE("entails splits the transitive and plain variants") {
  auto kbT = put("kb_t.kb", KB_T);
  auto kbR = put("kb_r.kb", KB_R);
  CHECK(run("entails " + kbT).code == 0);
  auto counter = (scratch() / "counter.out").string();
  CHECK(run("entails " + kbR + " --emit " + counter).code == 1);
  CHECK(slurp(counter).find("domain") == 0);
}

TEST_CASE("unravel and prune run the tree pipeline") {
  auto f = put("f_chain.unfo", std::string(fixtures::SIG1) + " A x. E y. T(x,y)");
  auto model = (scratch() / "chain.out").string();
  REQUIRE(run("bruteforce " + f + " --max-n 3 --emit " + model).code == 0);
  auto dot = (scratch() / "tree.dot").string();
  auto r = run("unravel " + f + " " + model + " --depth 4 --dot " + dot + " --json");
  CHECK(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("detail").at("tree_nodes").get<int>() >= 1);
  CHECK(slurp(dot).find("digraph") != std::string::npos);

  auto rp = run("prune " + f + " " + model + " --json");
  CHECK(rp.code == 0);
  auto jp = json::parse(rp.out);
  CHECK(jp.at("status") == "pass");
  CHECK(jp.at("detail").contains("rank_bound"));
}

TEST_CASE("convert round trips text artifacts through json") {
  auto cyc = put("f_cyc.unfo", fixtures::F_CYC);
  auto fj = (scratch() / "f.json").string();
  auto f2 = (scratch() / "f2.unfo").string();
  REQUIRE(run("convert " + cyc + " " + fj).code == 0);
  REQUIRE(run("convert " + fj + " " + f2).code == 0);
  CHECK(slurp(cyc) == slurp(f2));

  auto model = (scratch() / "rt.out").string();
  REQUIRE(run("bruteforce " + cyc + " --max-n 4 --emit " + model).code == 0);
  auto mj = (scratch() / "m.json").string();
  auto m2 = (scratch() / "m2.out").string();
  REQUIRE(run("convert " + model + " " + mj).code == 0);
  REQUIRE(run("convert " + mj + " " + m2).code == 0);
  CHECK(slurp(model) == slurp(m2));
}

TEST_CASE("errors and bad usage exit at three or above") {
  CHECK(run("check " + (scratch() / "missing.unfo").string()).code >= 3);
  CHECK(run("check").code >= 3);
  CHECK(run("frobnicate x").code >= 3);
  auto bad = put("bad.xyz", "domain 1\n");
  CHECK(run("convert " + bad + " " + (scratch() / "o.json").string()).code >= 3);
  auto garbled = put("garbled.unfo", "sig { unary P; } P(");
  CHECK(run("check " + garbled).code >= 3);
}

TEST_CASE("time limits degrade to unknown, exit two") {
  auto kbT = put("kb_t.kb", KB_T);
  auto r = run("entails " + kbT + " --time-limit 0.2 --json");
  CHECK(r.code == 2);
  auto j = json::parse(r.out);
  CHECK(j.at("status") == "unknown");
  CHECK(j.at("detail").at("reason").get<std::string>().find("time limit") != std::string::npos);
}
