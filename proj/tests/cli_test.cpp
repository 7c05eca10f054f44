// Drives the qpv binary: exit codes, seed fallback, diagnostics.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("qpv_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun qpv(const std::string& args, const std::string& env = "") {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = env + " '" + std::string(QPV_CLI) + "' " + args + " 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::string scenario(const std::string& name) { return std::string(QPV_SCENARIOS) + "/" + name; }

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Cli, SuccessWritesReport) {
  const fs::path out = scratch() / "honest.csv";
  const CliRun r = qpv("run --scenario " + scenario("pv_honest.json") +
                    " --experiment pv-honest --trials 50 --seed 3 --out " + out.string());
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find(",pass,"), std::string::npos);
}

TEST(Cli, AssertionFailureExitsOne) {
  const fs::path s = write("strict.json", R"({"schema": 1, "attack": "breidbart", "expect": {"max_frequency": 0.5}})");
  const CliRun r = qpv("run --scenario " + s.string() + " --experiment pv-attack --trials 200 --seed 1 --out " +
                    (scratch() / "strict.csv").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("assertion failed"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path bad = write("bad.json", R"({"schema": 1, "timing": {"T": 1.0, "delta": 0.3}})");
  CliRun r = qpv("run --scenario " + bad.string() + " --experiment pv-attack --trials 5 --out -");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("adversary_pos"), std::string::npos) << r.err;

  r = qpv("run --scenario " + scenario("pv_honest.json") + " --experiment warp-drive --trials 5");
  EXPECT_EQ(r.code, 2);

  const std::string missing = (scratch() / "no_such_file.json").string();
  r = qpv("run --scenario " + missing + " --experiment pv-honest --trials 5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;

  const std::string unwritable = (scratch() / "no_dir" / "out.csv").string();
  r = qpv("run --scenario " + scenario("pv_honest.json") + " --experiment pv-honest --trials 5 --out " + unwritable);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(unwritable), std::string::npos) << r.err;

  r = qpv("run --scenario " + scenario("pv_honest.json") + " --experiment pv-honest --trials 5", "QPV_SEED=abc");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("QPV_SEED"), std::string::npos);
}

// Shipped scenarios carry assertions sized for long runs.
const char* kPlain = R"({"schema": 1, "attack": "breidbart"})";

TEST(Cli, SeedFallsBackToEnvironment) {
  const std::string base = "run --scenario " + write("plain.json", kPlain).string() + " --experiment pv-attack --trials 300";
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json", c = scratch() / "c.json";
  EXPECT_EQ(qpv(base + " --format json --seed 77 --out " + a.string()).code, 0);
  EXPECT_EQ(qpv(base + " --format json --out " + b.string(), "QPV_SEED=77").code, 0);
  EXPECT_EQ(qpv(base + " --format json --workers 2 --out " + c.string(), "QPV_SEED=77").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a), slurp(c));
  EXPECT_NE(slurp(a).find("\"seed\": 77"), std::string::npos);
}

TEST(Cli, TranscriptExport) {
  const fs::path t = scratch() / "t.jsonl";
  const CliRun r = qpv("run --scenario " + write("plain.json", kPlain).string() +
                       " --experiment pv-attack --trials 5 --out " + (scratch() / "t.csv").string() + " --transcript " +
                    t.string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_GT(slurp(t).size(), 0u);
}

TEST(Cli, EveryShippedScenarioValidates) {
  // Short runs; only configuration problems matter here.
  const std::pair<const char*, const char*> cases[] = {
      {"pv_honest.json", "pv-honest"},          {"pv_attack_breidbart.json", "pv-attack"},
      {"pv_attack_store_and_wait.json", "pv-attack"}, {"pv_attack_teleport.json", "pv-attack"},
      {"pv_sequential.json", "pv-sequential"},  {"pv_ddim.json", "pv-ddim"},
      {"inqc_two_party.json", "inqc"},          {"inqc_two_qubit.json", "inqc"},
      {"inqc_three_party.json", "inqc-nparty"}, {"generic_bb84.json", "generic-attack"},
      {"generic_toy.json", "generic-attack"},   {"generic_random_family.json", "generic-attack"},
      {"cit_audit.json", "cit-audit"},          {"auth_honest.json", "auth"},
      {"auth_desync.json", "auth"},             {"domination_br.json", "domination"},
      {"domination_alternating.json", "domination"}, {"keyex.json", "keyex"}};
  for (const auto& [file, id] : cases) {
    const CliRun r = qpv("run --scenario " + scenario(file) + " --experiment " + id + " --trials 2 --seed 1 --out " +
                      (scratch() / "v.csv").string());
    EXPECT_NE(r.code, 2) << file << ": " << r.err;
  }
}
