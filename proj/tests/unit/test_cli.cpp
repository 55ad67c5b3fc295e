#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "refactorkit/cli.hpp"
#include "refactorkit/evaluator.hpp"
#include "refactorkit/harness.hpp"
#include "refactorkit/stategym.hpp"
#include "support.hpp"

using namespace refactorkit;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = refactorkit::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& rel) { return (rktest::fixtures() / rel).string(); }

std::vector<std::string> gunzip_agent(const std::filesystem::path& out) {
  return {"agent", fx("manifest.json"), "parameterize-gunzip", "--lm", "scripted:" + fx("episodes/gunzip-ledger.script.json"),
          "--external-edits", fx("episodes/gunzip-ledger.external.json"), "--out", out.string()};
}

std::string golden(const std::string& name) {
  return read_file(std::filesystem::path(REFACTORKIT_SOURCE_DIR) / "tests" / "golden" / name);
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"eval", fx("manifest.json")}).code, 2);
  EXPECT_EQ(invoke({"eval", fx("manifest.json"), fx("patches"), "--jobs", "0"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, Validate) {
  auto r = invoke({"validate", fx("manifest.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("3 tasks, 2 repos"), std::string::npos);
  EXPECT_NE(r.out.find("parameterize-gunzip (miniscrapy): 9 assertions"), std::string::npos);
  EXPECT_EQ(invoke({"validate", "/nonexistent/manifest.json"}).code, 2);

  rktest::TempDir dir;
  Json m = rktest::fixture_json("manifest.json");
  m["tasks"][0]["suite_ref"] = "suites/missing.json";
  for (auto& repo : m["repos"]) repo["snapshot"] = fx("repos/" + repo["repo_id"].get<std::string>());
  write_file(dir.path() / "m.json", m.dump());
  auto dangling = invoke({"validate", (dir.path() / "m.json").string()});
  EXPECT_EQ(dangling.code, 2);
  EXPECT_NE(dangling.err.find("error:"), std::string::npos);
}

TEST(Cli, EvalReferencePatchesResolve) {
  rktest::TempDir dir;
  auto r = invoke({"eval", fx("manifest.json"), fx("patches"), "--out", (dir.path() / "b.json").string(), "--jobs", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resolution_rate: 1.0000 (3/3)"), std::string::npos);
  Json batch = Json::parse(read_file(dir.path() / "b.json"));
  EXPECT_EQ(batch["schema_version"], "refactorkit.batch/1");
  EXPECT_EQ(batch["score"]["resolution_rate"], 1.0);
}

TEST(Cli, EvalEmptyAndMalformedPatches) {
  rktest::TempDir dir;
  auto empty = invoke({"eval", fx("manifest.json"), dir.path().string()});
  EXPECT_EQ(empty.code, 1);
  EXPECT_NE(empty.out.find("resolution_rate: 0.0000 (0/3)"), std::string::npos);
  EXPECT_NE(empty.err.find("no patch for parameterize-gunzip"), std::string::npos);

  write_file(dir.path() / "rename-cantcreat.patch", "--- a/x\n+++ b/x\n@@ bogus @@\n");
  auto bad = invoke({"eval", fx("manifest.json"), dir.path().string(), "--tasks", "rename-cantcreat", "--out",
                  (dir.path() / "r.txt").string(), "--format", "text"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(read_file(dir.path() / "r.txt").find("patch rejected"), std::string::npos) << read_file(dir.path() / "r.txt");
  EXPECT_EQ(invoke({"eval", fx("manifest.json"), dir.path().string(), "--tasks", "no-such-task"}).code, 2);
}

TEST(Cli, StatsMatchesSheet) {
  rktest::TempDir dir;
  auto r = invoke({"stats", fx("manifest.json"), "--out", (dir.path() / "s.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(read_file(dir.path() / "s.json")), rktest::fixture_json("expected/stats.json"));
  EXPECT_NE(r.out.find("base_instruction_words: mean 24.6667, max 27.0000"), std::string::npos);

  Json m = rktest::fixture_json("manifest.json");
  m["tasks"] = Json::array();
  for (auto& repo : m["repos"]) repo["snapshot"] = fx("repos/" + repo["repo_id"].get<std::string>());
  write_file(dir.path() / "empty.json", m.dump());
  EXPECT_EQ(invoke({"stats", (dir.path() / "empty.json").string()}).code, 2);
}

TEST(Cli, Pseudotask) {
  rktest::TempDir dir;
  const Json want = rktest::fixture_json("expected/pseudotask-scrapy3.json");
  std::vector<std::string> args = {"pseudotask", fx("manifest-extended.json")};
  for (const auto& id : want["task_ids"]) args.push_back(id.get<std::string>());
  args.insert(args.end(), {"--out", (dir.path() / "p.json").string()});
  auto r = invoke(args);
  EXPECT_EQ(r.code, 0) << r.err;
  const Json got = Json::parse(read_file(dir.path() / "p.json"));
  EXPECT_EQ(got["task_ids"], want["task_ids"]);
  EXPECT_EQ(got["repo_id"], want["repo_id"]);
  EXPECT_EQ(got["combined_instruction"], want["combined_instruction"]);
  EXPECT_EQ(got["suite"]["assertions"].size(), want["suite_size"].get<std::size_t>());
  EXPECT_NE(r.out.find("19 assertions"), std::string::npos);
  EXPECT_EQ(invoke({"pseudotask", fx("manifest.json"), "parameterize-gunzip", "rename-cantcreat", "--out",
                 (dir.path() / "x.json").string()})
                .code,
            2);
  EXPECT_EQ(invoke({"pseudotask", fx("manifest.json"), "parameterize-gunzip", "nope", "--out",
                 (dir.path() / "x.json").string()})
                .code,
            2);
}

TEST(Cli, AgentGoldenTrajectory) {
  rktest::TempDir dir;
  auto r = invoke(gunzip_agent(dir.path()));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("parameterize-gunzip: submitted after 14 steps"), std::string::npos);
  EXPECT_EQ(read_file(dir.path() / "parameterize-gunzip.trajectory.json"), golden("agent-gunzip-ledger.trajectory.json"));
  EXPECT_EQ(read_file(dir.path() / "parameterize-gunzip.patch"), golden("agent-gunzip-ledger.patch"));
}

TEST(Cli, AgentRecordThenReplayIsIdentical) {
  rktest::TempDir dir;
  auto args = gunzip_agent(dir.path() / "rec");
  args.insert(args.end(), {"--record", (dir.path() / "c.json").string()});
  ASSERT_EQ(invoke(args).code, 0);
  auto replay = gunzip_agent(dir.path() / "rep");
  replay[4] = "replay:" + (dir.path() / "c.json").string();
  auto r = invoke(replay);
  ASSERT_EQ(r.code, 0) << r.err;
  Json a = Json::parse(read_file(dir.path() / "rec" / "parameterize-gunzip.trajectory.json"));
  Json b = Json::parse(read_file(dir.path() / "rep" / "parameterize-gunzip.trajectory.json"));
  EXPECT_EQ(a["model"], "scripted");
  EXPECT_EQ(b["model"], "replay");
  a.erase("model");
  b.erase("model");
  EXPECT_EQ(a, b);
  EXPECT_EQ(read_file(dir.path() / "rec" / "parameterize-gunzip.patch"),
            read_file(dir.path() / "rep" / "parameterize-gunzip.patch"));
}

TEST(Cli, AgentPolicyNoneOmitsState) {
  rktest::TempDir dir;
  auto args = gunzip_agent(dir.path());
  args.insert(args.end(), {"--policy", "none"});
  ASSERT_EQ(invoke(args).code, 0);
  const std::string text = read_file(dir.path() / "parameterize-gunzip.trajectory.json");
  EXPECT_EQ(text.find("(Current State:"), std::string::npos);
  EXPECT_EQ(text.find("(External Edits:"), std::string::npos);
  EXPECT_NE(golden("agent-gunzip-ledger.trajectory.json").find("(Current State:"), std::string::npos);
}

TEST(Cli, AgentStepLimitAndConfig) {
  rktest::TempDir dir;
  auto args = gunzip_agent(dir.path());
  args.insert(args.end(), {"--max-steps", "4"});
  auto r = invoke(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("step_limit after 4 steps"), std::string::npos);

  write_file(dir.path() / "cfg.json", R"({"max_steps": 3, "window": 2, "instruction_set": "lazy"})");
  auto cfg = gunzip_agent(dir.path());
  cfg.insert(cfg.end(), {"--config", (dir.path() / "cfg.json").string()});
  EXPECT_EQ(invoke(cfg).code, 1);
  Json t = Json::parse(read_file(dir.path() / "parameterize-gunzip.trajectory.json"));
  EXPECT_EQ(t["window"], 2);
  EXPECT_EQ(t["history"].size(), 6u);
  cfg.insert(cfg.end(), {"--max-steps", "60"});
  EXPECT_EQ(invoke(cfg).code, 0);

  write_file(dir.path() / "bad.json", R"({"colour": 1})");
  auto bad = gunzip_agent(dir.path());
  bad.insert(bad.end(), {"--config", (dir.path() / "bad.json").string()});
  EXPECT_EQ(invoke(bad).code, 2);
}

TEST(Cli, AgentConfigErrors) {
  rktest::TempDir dir;
  EXPECT_EQ(invoke({"agent", fx("manifest.json"), "parameterize-gunzip", "--out", dir.path().string()}).code, 2);
  unsetenv("REFACTORKIT_LM_BASE_URL");
  EXPECT_EQ(invoke({"agent", fx("manifest.json"), "parameterize-gunzip", "--lm", "remote", "--out", dir.path().string()}).code,
            2);
  EXPECT_EQ(invoke({"agent", fx("manifest.json"), "nope", "--lm", "scripted:" + fx("episodes/one-file.script.json"), "--out",
                 dir.path().string()})
                .code,
            2);
  EXPECT_EQ(invoke({"agent", fx("manifest.json"), "parameterize-gunzip", "--lm", "scripted:/missing.json", "--out",
                 dir.path().string()})
                .code,
            2);
}

TEST(Cli, StategymOracleAndLossy) {
  rktest::TempDir dir;
  auto r = invoke({"stategym", "--lm", "oracle", "--out", (dir.path() / "t.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  Json t = Json::parse(read_file(dir.path() / "t.json"));
  ASSERT_EQ(t["points"].size(), 6u);
  for (const auto& pt : t["points"]) EXPECT_EQ(pt["exact_match"], 1.0);

  auto lossy = invoke({"stategym", "--lm", "lossy:0.02", "--out", (dir.path() / "l.json").string()});
  EXPECT_EQ(lossy.code, 0);
  EXPECT_LT(Json::parse(read_file(dir.path() / "l.json"))["trend"]["slope"].get<double>(), 0.0);
  EXPECT_NE(lossy.out.find("trend: slope=-"), std::string::npos);
}

TEST(Cli, StategymRunsFileRoundTrip) {
  rktest::TempDir dir;
  const std::string runs = (dir.path() / "runs.json").string();
  ASSERT_EQ(invoke({"stategym", "--seed", "5", "--initial", "2", "--per-state", "2", "--actions", "8", "--grid", "0,4,8",
                 "--lm", "echo", "--runs-out", runs})
                .code,
            0);
  auto loaded = stategym::runs_from_json(Json::parse(read_file(runs)));
  EXPECT_EQ(loaded, stategym::generate_runs(5, 2, 2, 8));
  auto again = invoke({"stategym", "--runs", runs, "--grid", "0", "--lm", "echo"});
  EXPECT_EQ(again.code, 0);
  EXPECT_NE(again.out.find("n=0 exact_match=1.0000"), std::string::npos);
}

TEST(Cli, StategymErrors) {
  EXPECT_EQ(invoke({"stategym"}).code, 2);
  EXPECT_EQ(invoke({"stategym", "--lm", "lossy:two"}).code, 2);
  EXPECT_EQ(invoke({"stategym", "--lm", "oracle", "--grid", "0,99"}).code, 2);
  EXPECT_EQ(invoke({"stategym", "--lm", "oracle", "--grid", "x"}).code, 2);
  unsetenv("REFACTORKIT_LM_BASE_URL");
  EXPECT_EQ(invoke({"stategym", "--lm", "remote"}).code, 2);
  // Exhausted script: completed, but with failures.
  rktest::TempDir dir;
  write_file(dir.path() / "s.json", R"(["nothing useful"])");
  auto r = invoke({"stategym", "--initial", "1", "--per-state", "2", "--actions", "3", "--grid", "0,1,2", "--lm",
                "scripted:" + (dir.path() / "s.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("failures=2"), std::string::npos);
}
