#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "dpkit/cli.hpp"

using namespace dpkit;
using nlohmann::json;

namespace {

const std::string kSrc = DPKIT_SOURCE_DIR;

struct Run {
  int code;
  json out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  json j = out.str().empty() ? json() : json::parse(out.str());
  return {code, j, err.str()};
}

json golden(const std::string& name) {
  std::ifstream in(kSrc + "/tests/golden/" + name);
  return json::parse(in);
}

int binary_exit(const std::string& args) {
  const char* bin = std::getenv("DPKIT_BIN");
  if (!bin) return -1;
  int st = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Golden, Check) {
  auto r = run({"check", "--formula", "lambda.dpf"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, golden("check_lambda.json"));
}

TEST(Golden, Volume) {
  auto r = run({"volume", "--set", "units.dpf", "--structure", "padic:5", "--depth", "3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, golden("volume_units_padic5.json"));
  EXPECT_EQ(r.out["inner"], "4/5");
  EXPECT_EQ(r.out["stabilized"], true);
}

TEST(Golden, FlCheck) {
  auto r = run({"fl-check", "--pair", kSrc + "/fixtures/pair_01.json", "--structure", "laurent:7", "--sign-mode",
                "parity_nu"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, golden("fl_check_pair01_laurent7.json"));
}

TEST(Golden, InvariantsEvalTransfer) {
  EXPECT_EQ(run({"invariants", "--matrix", "[[[0,1],[0,1]],[[0,2],[0,3]]]", "--structure", "padic:5"}).out,
            golden("invariants_s2.json"));
  EXPECT_EQ(run({"eval", "--formula", "unit_squares", "--structure", "padic:7", "--point", "{\"x\": 2}"}).out,
            golden("eval_unit_squares.json"));
  EXPECT_EQ(run({"transfer", "--quantity", "volume", "--grid", "{\"set\":\"cylinder\",\"depth\":2}", "--primes", "3,5"}).out,
            golden("transfer_cylinder.json"));
}

TEST(Schema, VersionOnEveryResult) {
  for (auto args : std::vector<std::vector<std::string>>{
           {"parse", "--formula", "ord(x) >= 0"},
           {"check", "--formula", "ord(x) ==="},
           {"orbital", "--matrix", "[[[0,1],[0,1]],[[0,1],[0,0]]]", "--structure", "padic:3"},
           {"fixtures", "--list"}}) {
    auto r = run(args);
    EXPECT_EQ(r.out["schema_version"], io::kSchemaVersion) << args[0];
  }
}

TEST(Adapter, MatchesLibrary) {
  auto S = Structure::parse("laurent:7");
  MeasureConfig cfg;
  cfg.depth = 2;
  auto lib = volume(fixtures::get("unit_squares").set, S, cfg);
  auto r = run({"volume", "--set", "unit_squares", "--structure", "laurent:7", "--depth", "2"});
  EXPECT_EQ(r.out["inner"], to_string(lib.inner));
  EXPECT_EQ(r.out["outer"], to_string(lib.outer));
}

TEST(Errors, ComputationErrorIsStructured) {
  auto r = run({"orbital", "--matrix", "[[[0,1],[0,0]],[[0,0],[0,2]]]", "--structure", "padic:5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out["ok"], false);
  EXPECT_EQ(r.out["error"]["kind"], "NotStronglyRegular");
}

TEST(Errors, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"volume"}).code, 2);
  EXPECT_EQ(run({"eval", "--formula", "units", "--structure", "padic:x"}).code, 2);
  EXPECT_EQ(run({"orbital", "--side", "sideways", "--matrix", "[]"}).code, 2);
}

TEST(Errors, TransferDisagreementExitsOne) {
  auto r = run({"transfer", "--quantity", "eval", "--grid", "{\"formula\":\"ord(x) == 1\",\"point\":{\"x\":3}}",
                "--primes", "3,5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out["summary"]["disagreements"], 1);
}

TEST(Fixtures, LibraryMatchesCheckedInFiles) {
  auto r = run({"fixtures", "--check", kSrc + "/fixtures"});
  EXPECT_EQ(r.code, 0) << r.out.dump();
}

TEST(Binary, ExitCodes) {
  if (!std::getenv("DPKIT_BIN")) GTEST_SKIP() << "DPKIT_BIN not set";
  EXPECT_EQ(binary_exit("check --formula lambda.dpf"), 0);
  EXPECT_EQ(binary_exit("check --formula 'ord(x) =='"), 1);
  EXPECT_EQ(binary_exit("no-such-command"), 2);
  EXPECT_EQ(binary_exit("volume --set units --structure padic:5 --depth 1"), 0);
}

TEST(Binary, ThreadsVariableValidated) {
  if (!std::getenv("DPKIT_BIN")) GTEST_SKIP() << "DPKIT_BIN not set";
  EXPECT_EQ(binary_exit("check --formula lambda.dpf"), 0);
  const char* bin = std::getenv("DPKIT_BIN");
  int st = std::system(("DPKIT_THREADS=zero " + std::string(bin) + " check --formula lambda.dpf > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(st), 2);
}
