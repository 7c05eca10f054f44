#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qpv/error.hpp"
#include "qpv/experiment.hpp"

using namespace qpv;

namespace {

const char* kLine = R"({"schema": 1, "layout": {"verifiers": [[0.0], [1.0]], "prover": [0.5]},
                        "timing": {"T": 1.0, "delta": 0.1, "slack": 0.0}, "attack": "breidbart"})";

std::string field_of(const std::string& json, const std::string& experiment = "pv-attack") {
  try {
    validate_for(parse_scenario(json), experiment);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string report(const std::vector<ResultRow>& rows, const std::string& format) {
  std::ostringstream os;
  write_report(rows, format, os);
  return os.str();
}

std::string with(const std::string& extra) {
  std::string s = kLine;
  s.insert(s.rfind('}'), ", " + extra);
  return s;
}

}  // namespace

TEST(Scenario, ParsesDefaults) {
  const Scenario s = parse_scenario(R"({"schema": 1})");
  EXPECT_EQ(s.layout.verifiers.size(), 2u);
  EXPECT_EQ(s.attack, "breidbart");
  EXPECT_FALSE(s.expect_min.has_value());
}

TEST(Scenario, ErrorsNameTheField) {
  EXPECT_EQ(field_of(R"({"name": "x"})"), "schema");
  EXPECT_EQ(field_of(R"({"schema": 7})"), "schema");
  EXPECT_EQ(field_of("{not json"), "scenario");
  EXPECT_EQ(field_of(with(R"("rounds": "ten")"), "pv-sequential"), "rounds");
  EXPECT_EQ(field_of(with(R"("model": "quantum")")), "model");
  EXPECT_EQ(field_of(R"({"schema": 1, "layout": {"verifiers": [[0.0], [1.0]]}})"), "layout.prover");
  EXPECT_EQ(field_of(R"({"schema": 1, "domination": {"c": "0101"}})", "domination"), "domination.c");
  EXPECT_EQ(field_of(R"({"schema": 1, "domination": {"c": "01x1", "c_prime": "0110"}})", "domination"),
            "domination.c");
}

TEST(Scenario, ValidationBeforeAnyTrial) {
  EXPECT_EQ(field_of(kLine), "");
  EXPECT_EQ(field_of(kLine, "no-such-experiment"), "experiment");
  // prover outside the verifiers' hull
  EXPECT_EQ(field_of(R"({"schema": 1, "layout": {"verifiers": [[0.0], [1.0]], "prover": [1.5]}})"),
            "layout.prover_pos");
  EXPECT_EQ(field_of(with(R"("timing": {"T": 1.0, "delta": -1.0})")), "timing.delta");
  // Breidbart adversaries sit 0.25 from the claimed position
  EXPECT_EQ(field_of(R"({"schema": 1, "timing": {"T": 1.0, "delta": 0.3}})"), "adversary_pos");
  EXPECT_EQ(field_of(with(R"("attack": "teleport_pre_shared")")), "model");
  EXPECT_EQ(field_of(with(R"("attack": "teleport_pre_shared", "model": "unrestricted")")), "");
  EXPECT_EQ(field_of(with(R"("attack": "nope")")), "attack");
  EXPECT_EQ(field_of(R"({"schema": 1, "auth": {"q": 0.02, "lambda": 2}})", "auth"), "auth.q");
  EXPECT_EQ(field_of(R"({"schema": 1, "auth": {"q": 0.01, "lambda": 2, "ell": 7}})", "auth"), "auth.ell");
  EXPECT_EQ(field_of(R"({"schema": 1, "auth": {"q": 0.01, "lambda": 2, "ell": 8}})", "auth"), "");
  EXPECT_EQ(field_of(R"({"schema": 1, "auth": {"q": 0.01, "lambda": 1, "mode": "x"}})", "auth"), "auth.mode");
  EXPECT_EQ(field_of(R"({"schema": 1, "keyex": {"q": 0.5}})", "keyex"), "keyex.q");
  EXPECT_EQ(field_of(R"({"schema": 1, "scheme": "qkd"})", "generic-attack"), "scheme");
  EXPECT_EQ(field_of(R"({"schema": 1, "split_e0": 3})", "cit-audit"), "split_e0");
}

TEST(Experiment, DeterministicAcrossRunsAndWorkers) {
  const Scenario s = parse_scenario(kLine);
  const auto a = run_experiment({"pv-attack", 300, 42, 1, false}, s);
  const auto b = run_experiment({"pv-attack", 300, 42, 1, false}, s);
  const auto c = run_experiment({"pv-attack", 300, 42, 3, false}, s);
  EXPECT_EQ(report(a, "csv"), report(b, "csv"));
  EXPECT_EQ(report(a, "json"), report(c, "json"));
  const auto d = run_experiment({"pv-attack", 300, 43, 1, false}, s);
  EXPECT_NE(report(a, "csv"), report(d, "csv"));
}

TEST(Experiment, GenericAndAuthDeterministicAcrossWorkers) {
  const Scenario g = parse_scenario(R"({"schema": 1, "scheme": "toy", "rounds_cap": 32})");
  EXPECT_EQ(report(run_experiment({"generic-attack", 60, 5, 1, false}, g), "csv"),
            report(run_experiment({"generic-attack", 60, 5, 4, false}, g), "csv"));
  const Scenario a = parse_scenario(R"({"schema": 1, "auth": {"q": 0.01, "lambda": 2, "mode": "desync"}})");
  EXPECT_EQ(report(run_experiment({"auth", 60, 5, 1, false}, a), "csv"),
            report(run_experiment({"auth", 60, 5, 2, false}, a), "csv"));
}

TEST(Report, OneRowCsvIsTwoLines) {
  const auto rows = run_experiment({"pv-honest", 10, 1, 1, false}, parse_scenario(kLine));
  const std::string csv = report(rows, "csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "experiment,params,seed,version,trials,successes,frequency,stderr,assertion,extra,detail");
}

TEST(Report, CarriesSeedAndVersion) {
  const auto rows = run_experiment({"pv-honest", 5, 987654321, 1, false}, parse_scenario(kLine));
  EXPECT_EQ(rows[0].seed, 987654321u);
  EXPECT_FALSE(rows[0].version.empty());
  EXPECT_NE(report(rows, "csv").find(",987654321," + version_string() + ","), std::string::npos);
}

TEST(Report, JsonRoundTrips) {
  const auto rows = run_experiment({"pv-attack", 200, 3, 1, false}, parse_scenario(kLine));
  const std::string text = report(rows, "json");
  const auto back = read_report_json(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].successes, rows[0].successes);
  EXPECT_EQ(back[0].seed, rows[0].seed);
  EXPECT_NEAR(back[0].frequency, rows[0].frequency, 1e-6);
  EXPECT_EQ(report(back, "json"), text);
}

TEST(Report, SixSignificantDigits) {
  ResultRow r;
  r.experiment = "pv-attack";
  r.trials = 3;
  r.successes = 1;
  r.frequency = 1.0 / 3.0;
  r.stderr_ = 0.27216552697590868;
  const std::string csv = report({r}, "csv");
  EXPECT_NE(csv.find(",0.333333,0.272166,"), std::string::npos);
}

TEST(Report, WallTimeOnlyWhenAsked) {
  const Scenario s = parse_scenario(kLine);
  const auto plain = run_experiment({"pv-honest", 5, 1, 1, false}, s);
  const auto timed = run_experiment({"pv-honest", 5, 1, 1, true}, s);
  EXPECT_FALSE(plain[0].wall_time.has_value());
  ASSERT_TRUE(timed[0].wall_time.has_value());
  EXPECT_NE(report(timed, "csv").find(",wall_time_s\n"), std::string::npos);
}

TEST(Experiment, EmbeddedAssertions) {
  const auto pass = run_experiment({"pv-honest", 20, 1, 1, false},
                                   parse_scenario(R"({"schema": 1, "expect": {"min_frequency": 1.0}})"));
  EXPECT_EQ(pass[0].assertion, "pass");
  const auto fail = run_experiment({"pv-attack", 200, 1, 1, false},
                                   parse_scenario(with(R"("expect": {"max_frequency": 0.5})")));
  EXPECT_EQ(fail[0].assertion, "fail");
  EXPECT_EQ(run_experiment({"pv-honest", 5, 1, 1, false}, parse_scenario(kLine))[0].assertion, "none");
}

TEST(Experiment, DominationDetailCarriesWitness) {
  const auto rows = run_experiment(
      {"domination", 1, 0, 1, false},
      parse_scenario(R"({"schema": 1, "domination": {"c": "10101010", "c_prime": "01010101", "lambda": 2}})"));
  EXPECT_EQ(rows[0].successes, 0u);
  EXPECT_NE(rows[0].detail.find("\"counterexample\""), std::string::npos);
  EXPECT_NE(rows[0].detail.find("\"e_prime\""), std::string::npos);
}

TEST(Experiment, EveryIdRuns) {
  for (const auto& id : experiment_ids()) {
    Scenario s = parse_scenario(R"({"schema": 1, "parties": 2, "rounds": 2, "auth": {"q": 0.01, "lambda": 1},
                                    "keyex": {"raw_rounds": 8}})");
    if (id == "pv-ddim") s.attack = "ddim_breidbart";
    const auto rows = run_experiment({id, 3, 1, 1, false}, s);
    ASSERT_EQ(rows.size(), 1u) << id;
    EXPECT_EQ(rows[0].experiment, id);
    EXPECT_LE(rows[0].successes, rows[0].trials) << id;
  }
}

TEST(Experiment, TranscriptReplaysTrialZero) {
  const Scenario s = parse_scenario(kLine);
  const auto t = trial_transcript({"pv-attack", 1, 9, 1, false}, s);
  EXPECT_FALSE(t.empty());
  std::ostringstream os;
  write_transcript_jsonl(os, t);
  const std::string text = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), t.size());
  EXPECT_THROW(trial_transcript({"auth", 1, 9, 1, false}, s), ConfigError);
}
