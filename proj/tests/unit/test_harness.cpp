#include <gtest/gtest.h>

#include "episode_gen.hpp"
#include "refactorkit/harness.hpp"
#include "support.hpp"

using namespace refactorkit;
using namespace refactorkit::harness;
using evaluator::FileMap;

namespace {

FileMap tree(const std::string& rel) {
  FileMap out;
  for (const auto& p : list_files(rktest::fixtures() / rel)) out[p] = read_file(rktest::fixtures() / rel / p);
  return out;
}

const FileMap& miniscrapy() {
  static const FileMap m = tree("repos/miniscrapy");
  return m;
}

Observation run(Environment& env, const std::string& block) { return env.step(parse_command(block)); }

Step edit_step(std::size_t n, const std::string& file, std::size_t a, std::size_t b) {
  Step s;
  s.action.index = n;
  s.observation.index = n;
  s.observation.edit = EditSpan{file, a, b};
  s.observation.working_dir = "flask_refactor";
  return s;
}

std::vector<std::string> script(const std::string& name) {
  return lmclient::load_script(rktest::fixtures() / "episodes" / name);
}

}  // namespace

// ---------------------------------------------------------------- parsing

TEST(ParseAction, BlockFromSystemPromptExample) {
  auto a = parse_action(
      "DISCUSSION\nFirst I'll start by using ls to see what files are in the current directory.\n```\nls -a\n```");
  ASSERT_TRUE(a.command);
  EXPECT_EQ(a.command->kind, CommandKind::Shell);
  EXPECT_EQ(a.command->raw, "ls -a");
}

TEST(ParseAction, TrajectoryEditRecord) {
  // Assistant record from the condensed successful trajectory.
  const std::string content =
      "DISCUSSION\nWe need to update the import statement for `send_from_directory` to import "
      "`send_from_directory_helper` as `send_from_directory`. Let's make the necessary edit.\n```\nedit 9:9\nfrom "
      "flask.helpers import send_from_directory_helper as send_from_directory\nend_of_edit\n```";
  auto a = parse_action(content, 7);
  EXPECT_EQ(a.index, 7u);
  EXPECT_EQ(a.discussion,
            "DISCUSSION\nWe need to update the import statement for `send_from_directory` to import "
            "`send_from_directory_helper` as `send_from_directory`. Let's make the necessary edit.\n");
  ASSERT_TRUE(a.command);
  EXPECT_EQ(a.command->kind, CommandKind::Edit);
  EXPECT_EQ(a.command->line_start, 9u);
  EXPECT_EQ(a.command->line_end, 9u);
  EXPECT_EQ(a.command->text, "from flask.helpers import send_from_directory_helper as send_from_directory\n");
  EXPECT_EQ(a.command->raw + "\n",
            "edit 9:9\nfrom flask.helpers import send_from_directory_helper as send_from_directory\nend_of_edit\n");
}

TEST(ParseAction, FormatViolations) {
  EXPECT_THROW(parse_action("no block at all"), FormatViolation);
  EXPECT_THROW(parse_action("D\n```\nls\n```\n```\npwd\n```"), FormatViolation);
  EXPECT_THROW(parse_action("D\n```\nls\n"), FormatViolation);
  EXPECT_THROW(parse_action("D\n```\nls\npwd\n```"), FormatViolation);
  EXPECT_THROW(parse_action("D\n```\n\n```"), FormatViolation);
  try {
    parse_action("D\n```\nls\n```\n```\npwd\n```");
  } catch (const FormatViolation& e) {
    EXPECT_NE(std::string(e.what()).find("one discussion and one command"), std::string::npos);
  }
}

TEST(ParseCommand, Vocabulary) {
  EXPECT_EQ(parse_command("open a/b.py 30").line, 30u);
  EXPECT_EQ(parse_command("open a/b.py").path, "a/b.py");
  EXPECT_EQ(parse_command("goto 583").kind, CommandKind::Goto);
  EXPECT_EQ(parse_command("scroll_down").kind, CommandKind::ScrollDown);
  EXPECT_EQ(parse_command("scroll_up").kind, CommandKind::ScrollUp);
  auto s = parse_command("search_dir \"get_encoding_from_headers\" tests");
  EXPECT_EQ(s.kind, CommandKind::Search);
  EXPECT_EQ(s.search_mode, "search_dir");
  EXPECT_EQ(s.text, "get_encoding_from_headers");
  EXPECT_EQ(s.path, "tests");
  EXPECT_EQ(parse_command("find_file gz.py").search_mode, "find_file");
  EXPECT_EQ(parse_command("create new.py").kind, CommandKind::Create);
  EXPECT_EQ(parse_command("submit").kind, CommandKind::Submit);
  EXPECT_EQ(parse_command("grep -rn foo .").kind, CommandKind::Shell);
  auto del = parse_command("edit 3:5\nend_of_edit");
  EXPECT_EQ(del.text, "");
}

TEST(ParseCommand, EditRangeMustBeOrdered) {
  EXPECT_THROW(parse_command("edit 0:1\nx\nend_of_edit"), FormatViolation);
  EXPECT_THROW(parse_command("edit 3:2\nx\nend_of_edit"), FormatViolation);
  EXPECT_THROW(parse_command("edit 3\nx\nend_of_edit"), FormatViolation);
  EXPECT_THROW(parse_command("edit 1:1\nx"), FormatViolation);
  EXPECT_THROW(parse_command("goto x"), FormatViolation);
}

// ---------------------------------------------------------------- environment

TEST(Environment, OpenThreeLineFile) {
  Environment env("repo", {{"m.py", "a = 1\nb = 2\nc = 3\n"}});
  auto o = run(env, "open m.py");
  EXPECT_EQ(o.text, "[File: /repo/m.py (3 lines total)]\n1:a = 1\n2:b = 2\n3:c = 3\n");
  EXPECT_EQ(o.open_file, "/repo/m.py");
  EXPECT_EQ(o.working_dir, "repo");
  EXPECT_FALSE(o.edit);
}

TEST(Environment, EditThenReopenShowsNewLine) {
  Environment env("repo", {{"m.py", "a = 1\nb = 2\nc = 3\n"}});
  run(env, "open m.py");
  auto e = run(env, "edit 2:2\nb = 20\nend_of_edit");
  ASSERT_TRUE(e.edit);
  EXPECT_EQ(*e.edit, (EditSpan{"m.py", 2, 2}));
  EXPECT_NE(e.text.find("File updated."), std::string::npos);
  EXPECT_NE(run(env, "open m.py").text.find("2:b = 20\n"), std::string::npos);
  EXPECT_EQ(env.files().at("m.py"), "a = 1\nb = 20\nc = 3\n");
}

TEST(Environment, EditInsertDeleteAndAppend) {
  Environment env("repo", {{"m.py", "a\nb\nc"}});
  run(env, "open m.py");
  run(env, "edit 2:2\nend_of_edit");
  EXPECT_EQ(env.files().at("m.py"), "a\nc");
  run(env, "edit 3:3\nd\nend_of_edit");
  EXPECT_EQ(env.files().at("m.py"), "a\nc\nd\n");
  auto bad = run(env, "edit 9:9\nz\nend_of_edit");
  EXPECT_FALSE(bad.edit);
  EXPECT_NE(bad.text.find("past the end"), std::string::npos);
}

TEST(Environment, GotoBeyondEndIsObservationError) {
  Environment env("repo", {{"m.py", "a\nb\n"}});
  EXPECT_EQ(run(env, "goto 1").text, "No file open. Use the open command first.");
  run(env, "open m.py");
  EXPECT_EQ(run(env, "goto 5").text, "Error: <line> must be less than or equal to 2");
  EXPECT_EQ(run(env, "open missing.py").text, "File missing.py not found");
}

TEST(Environment, WindowAndScroll) {
  std::string text;
  for (int i = 1; i <= 25; ++i) text += "line" + std::to_string(i) + "\n";
  EnvConfig cfg;
  cfg.window_lines = 10;
  Environment env("repo", {{"big.py", text}}, cfg);
  auto o = run(env, "open big.py");
  EXPECT_NE(o.text.find("1:line1\n"), std::string::npos);
  EXPECT_NE(o.text.find("(15 more lines below)"), std::string::npos);
  o = run(env, "scroll_down");
  EXPECT_NE(o.text.find("(10 more lines above)"), std::string::npos);
  EXPECT_NE(o.text.find("11:line11\n"), std::string::npos);
  o = run(env, "scroll_down");
  EXPECT_NE(o.text.find("25:line25\n"), std::string::npos);
  EXPECT_EQ(o.text.find("more lines below"), std::string::npos);
  o = run(env, "goto 20");
  EXPECT_NE(o.text.find("20:line20\n"), std::string::npos);
  o = run(env, "scroll_up");
  EXPECT_NE(o.text.find("6:line6\n"), std::string::npos);
}

TEST(Environment, SearchCommands) {
  Environment env("miniscrapy", miniscrapy());
  auto o = run(env, "search_dir GunzipParams");
  EXPECT_EQ(o.text, "No matches found for \"GunzipParams\" in /miniscrapy");
  o = run(env, "search_dir gunzip scrapy");
  EXPECT_TRUE(o.text.starts_with("Found ")) << o.text;
  EXPECT_NE(o.text.find("/miniscrapy/scrapy/utils/gz.py ("), std::string::npos);
  EXPECT_EQ(o.text.find("tests/"), std::string::npos);
  o = run(env, "find_file gz.py");
  EXPECT_EQ(o.text, "Found 1 matches for \"gz.py\" in /miniscrapy:\n/miniscrapy/scrapy/utils/gz.py\n");
  run(env, "open scrapy/utils/gz.py");
  o = run(env, "search_file max_size");
  EXPECT_NE(o.text.find("Line 10:def gunzip"), std::string::npos);
  EXPECT_EQ(run(env, "search_dir x nowhere").text, "Directory nowhere not found");
}

TEST(Environment, CreateAndShellSubset) {
  Environment env("repo", {{"pkg/a.py", "import os\n"}, {".hidden", ""}});
  EXPECT_EQ(run(env, "ls").text, "pkg");
  EXPECT_EQ(run(env, "ls -aF").text, ".hidden\npkg/");
  EXPECT_EQ(run(env, "ls pkg").text, "a.py");
  EXPECT_EQ(run(env, "pwd").text, "/repo");
  EXPECT_EQ(run(env, "cat pkg/a.py").text, "import os\n");
  EXPECT_EQ(run(env, "grep -rn os .").text, "pkg/a.py:1:import os");
  EXPECT_EQ(run(env, "find . -name \"*.py\"").text, "./pkg/a.py");
  EXPECT_EQ(run(env, "cd repo").text, "");
  EXPECT_EQ(run(env, "python setup.py").text, "bash: python: command not available in this environment");
  auto c = run(env, "create pkg/b.py");
  EXPECT_EQ(c.open_file, "/repo/pkg/b.py");
  EXPECT_EQ(env.files().at("pkg/b.py"), "");
  EXPECT_NE(run(env, "create pkg/b.py").text.find("already exists"), std::string::npos);
  EXPECT_EQ(run(env, "cat ../etc/passwd").text, "cat: ../etc/passwd: No such file or directory\n");
}

TEST(Environment, TruncatesLongOutput) {
  EnvConfig cfg;
  cfg.max_observation_chars = 50;
  Environment env("repo", {{"a.txt", std::string(500, 'x')}}, cfg);
  auto o = run(env, "cat a.txt");
  EXPECT_TRUE(o.truncated);
  EXPECT_TRUE(o.text.starts_with(std::string(50, 'x') + "\n[Output truncated: 450 more characters]"));
  EXPECT_FALSE(run(env, "pwd").truncated);
}

TEST(Environment, ExternalEditRanges) {
  Environment env("repo", {{"m.py", "a\nb\nc\n"}});
  env.apply_external({"m.py", 2, 3, "B\n"});
  EXPECT_EQ(env.files().at("m.py"), "a\nB\n");
  EXPECT_THROW(env.apply_external({"m.py", 0, 1, ""}), InvalidRange);
  EXPECT_THROW(env.apply_external({"m.py", 2, 1, ""}), InvalidRange);
  EXPECT_THROW(env.apply_external({"m.py", 2, 9, ""}), InvalidRange);
  EXPECT_THROW(env.apply_external({"nope.py", 1, 1, ""}), InvalidRange);
}

// ---------------------------------------------------------------- state

TEST(Ledger, DedupKeepsFirstOccurrence) {
  std::vector<Step> prefix = {edit_step(1, "helpers.py", 514, 514), edit_step(2, "app.py", 42, 42),
                              edit_step(3, "helpers.py", 514, 514)};
  auto s = ledger_update(prefix, {}, {});
  EXPECT_EQ(s.recent_edits, (std::vector<std::string>{"Edited helpers.py at lines 514:514", "Edited app.py at lines 42:42"}));
  auto records = fold_ledger(prefix);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].first_seen, 1u);
}

TEST(Ledger, SameFileDifferentRangesAreDistinct) {
  auto s = ledger_update({edit_step(1, "a.py", 5, 5), edit_step(2, "a.py", 5, 6), edit_step(3, "a.py", 5, 5)}, {}, {});
  EXPECT_EQ(s.recent_edits.size(), 2u);
}

TEST(Ledger, NoEditsIsEmpty) {
  Step s;
  s.action.index = 1;
  s.observation.working_dir = "w";
  EXPECT_TRUE(ledger_update({s}, {}, {}).recent_edits.empty());
}

TEST(Ledger, ExternalEventRendering) {
  auto s = ledger_update({edit_step(1, "utils.py", 542, 542)}, {}, {{"adapters.py", 359, 359, "x\n"}});
  ASSERT_EQ(s.external_edits.size(), 1u);
  EXPECT_EQ(s.external_edits[0], "Since your previous action, another user edited adapters.py at lines 359:359");
}

TEST(StateBlock, CurrentStateFromTrajectoryLog) {
  StateSummary s{"flask_refactor",
                 "/flask_refactor/tests/test_helpers.py",
                 {"Edited helpers.py at lines 514:514", "Edited __init__.py at lines 24:24", "Edited app.py at lines 42:42",
                  "Edited blueprints.py at lines 9:9", "Edited test_helpers.py at lines 9:9"},
                 {}};
  EXPECT_EQ(render_state_block(s),
            "(Current State: ['Edited helpers.py at lines 514:514', 'Edited __init__.py at lines 24:24', 'Edited app.py "
            "at lines 42:42', 'Edited blueprints.py at lines 9:9', 'Edited test_helpers.py at lines 9:9'])\n"
            "(Open file: /flask_refactor/tests/test_helpers.py)\n"
            "(Current directory: flask_refactor)\n"
            "bash-$");
}

TEST(StateBlock, EmptyAndExternalOrdering) {
  StateSummary s{"w", "n/a", {}, {}};
  EXPECT_EQ(render_state_block(s), "(Current State: [])\n(Open file: n/a)\n(Current directory: w)\nbash-$");
  s.recent_edits = {"Edited utils.py at lines 542:542"};
  s.external_edits = {"Since your previous action, another user edited adapters.py at lines 359:359"};
  const std::string block = render_state_block(s);
  EXPECT_TRUE(block.starts_with(
      "(External Edits: ['Since your previous action, another user edited adapters.py at lines 359:359'])\n"
      "(Current State: ['Edited utils.py at lines 542:542'])\n"));
}

TEST(StateBlock, NullPolicyOmitsStateLines) {
  StateSummary s{"w", "/w/a.py", {"Edited a.py at lines 1:1"}, {"x"}};
  const std::string block = NullPolicy().render(s);
  EXPECT_EQ(block, "(Open file: /w/a.py)\n(Current directory: w)\nbash-$");
  EXPECT_THROW(make_policy("fancy"), SchemaError);
}

TEST(StateDocument, InitialStateFromTrajectoryLog) {
  StateSummary s{"flask_refactor", "n/a", {}, {}};
  EXPECT_EQ(state_document(s), "{\"working_dir\": \"flask_refactor\", \"open_file\": \"n/a\", \"recent_edits\": []}");
  EXPECT_EQ(state_from_document(state_document(s)), s);
  StateSummary t{"w", "/w/é.py", {"Edited \"q\".py at lines 1:2"}, {"ext"}};
  EXPECT_EQ(state_from_document(state_document(t)), t);
  EXPECT_NE(state_document(t).find("\\u00e9"), std::string::npos);
}

// ---------------------------------------------------------------- window

TEST(Window, EightStepsKeepFive) {
  Trajectory t;
  t.window = 5;
  t.initial_state = {"w", "n/a", {}, {}};
  for (std::size_t n = 1; n <= 8; ++n) {
    Step s;
    s.action = {n, "reply " + std::to_string(n), "", parse_command("pwd")};
    s.observation = {n, "obs " + std::to_string(n) + "\nmore", false, std::nullopt, "n/a", "w"};
    s.state = {"w", "n/a", {}, {}};
    t.steps.push_back(s);
  }
  LedgerPolicy policy;
  auto msgs = window_context(t, policy);
  ASSERT_EQ(msgs.size(), 2u + 16u);
  std::size_t verbatim = 0, elided = 0;
  for (std::size_t i = 3; i < msgs.size(); i += 2) {
    if (msgs[i].text == "Old environment output: (2 lines omitted)") ++elided;
    else ++verbatim;
  }
  EXPECT_EQ(verbatim, 5u);
  EXPECT_EQ(elided, 3u);
  for (std::size_t i = 2; i < msgs.size(); i += 2) EXPECT_EQ(msgs[i].role, "assistant");
  EXPECT_EQ(msgs[2].text, "reply 1");
  EXPECT_TRUE(msgs.back().text.starts_with("obs 8\nmore\n(Current State: [])"));
}

TEST(Window, PropertyAgainstBruteForce) {
  LedgerPolicy policy;
  for (std::size_t w = 1; w <= 7; ++w)
    for (std::size_t n = 0; n <= 12; ++n) {
      Trajectory t;
      t.window = w;
      for (std::size_t k = 1; k <= n; ++k) {
        Step s;
        s.action = {k, "r", "", std::nullopt};
        s.observation = {k, "o" + std::to_string(k), false, std::nullopt, "n/a", "w"};
        t.steps.push_back(s);
      }
      auto msgs = window_context(t, policy);
      for (std::size_t k = 0; k < n; ++k) {
        const bool keep = k + w >= n;
        EXPECT_EQ(msgs[3 + 2 * k].text.starts_with("o"), keep) << w << " " << n << " " << k;
      }
    }
}

// ---------------------------------------------------------------- episodes

TEST(Episode, OneFileOpenEditSubmit) {
  lmclient::ScriptedClient lm(script("one-file.script.json"));
  LedgerPolicy policy;
  Episode ep("one-file", "Return two.", "one-file", tree("episodes/one-file"), lm, policy, {});
  ep.run();
  const auto& t = ep.trajectory();
  EXPECT_EQ(t.status, EpisodeStatus::Submitted);
  ASSERT_EQ(t.steps.size(), 3u);
  auto patch = evaluator::parse_patch(ep.patch());
  ASSERT_EQ(patch.files.size(), 1u);
  EXPECT_EQ(patch.files[0].hunks.size(), 1u);
  auto want = rktest::fixture_json("expected/episode-one-file.json");
  for (std::size_t i = 0; i < t.steps.size(); ++i)
    EXPECT_EQ(t.steps[i].state.recent_edits, want["steps"][i]["recent_edits"].get<std::vector<std::string>>());
  EXPECT_EQ(ep.environment().files().at("app.py"), want["changed_files"]["app.py"].get<std::string>());
}

TEST(Episode, ScriptedGunzipMatchesOracle) {
  lmclient::ScriptedClient lm(script("gunzip-ledger.script.json"));
  LedgerPolicy policy;
  EpisodeConfig cfg;
  cfg.external_edits = scheduled_edits_from_json(rktest::fixture_json("episodes/gunzip-ledger.external.json"));
  Episode ep("parameterize-gunzip", "Encapsulate.", "miniscrapy", miniscrapy(), lm, policy, cfg);
  ep.run();
  const auto& t = ep.trajectory();
  auto want = rktest::fixture_json("expected/episode-gunzip-ledger.json");
  EXPECT_EQ(to_string(t.status), want["status"]);
  ASSERT_EQ(t.steps.size(), want["steps"].size());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& w = want["steps"][i];
    const auto& s = t.steps[i];
    EXPECT_EQ(!s.action.command.has_value(), w["format_violation"].get<bool>()) << i;
    if (w["edit"].is_null()) {
      EXPECT_FALSE(s.observation.edit) << i;
    } else {
      ASSERT_TRUE(s.observation.edit) << i;
      EXPECT_EQ(s.observation.edit->file, w["edit"][0]);
      EXPECT_EQ(s.observation.edit->line_start, w["edit"][1]);
      EXPECT_EQ(s.observation.edit->line_end, w["edit"][2]);
    }
    EXPECT_EQ(s.state.recent_edits, w["recent_edits"].get<std::vector<std::string>>()) << i;
    EXPECT_EQ(s.state.external_edits, w["external_edits"].get<std::vector<std::string>>()) << i;
    EXPECT_EQ(s.state.open_file, w["open_file"]) << i;
    EXPECT_EQ(s.state.working_dir, w["working_dir"]) << i;
  }
  FileMap expect = miniscrapy();
  for (const auto& [p, text] : want["changed_files"].items()) expect[p] = text.get<std::string>();
  EXPECT_EQ(ep.environment().files(), expect);
  FileMap patched = miniscrapy();
  evaluator::apply_patch(patched, evaluator::parse_patch(ep.patch()));
  EXPECT_EQ(patched, expect);
  EXPECT_TRUE(states_recompute(t, policy));
  // The external line is the first line of step 10's rendered block.
  auto msgs = window_context(t, policy);
  EXPECT_NE(msgs[2 + 2 * 9 + 1].text.find("\n(External Edits: ['Since your previous action, another user edited "
                                          "scrapy/utils/gz.py at lines 1:1'])\n(Current State: "),
            std::string::npos);
}

TEST(Episode, NeverSubmittingHitsStepLimit) {
  lmclient::ScriptedClient lm(std::vector<std::string>(10, rktest::reply("look", "ls")));
  LedgerPolicy policy;
  EpisodeConfig cfg;
  cfg.max_steps = 4;
  Episode ep("t", "i", "w", {{"a.py", "x\n"}}, lm, policy, cfg);
  ep.run();
  EXPECT_EQ(ep.trajectory().status, EpisodeStatus::StepLimit);
  EXPECT_EQ(ep.trajectory().steps.size(), 4u);
  EXPECT_EQ(ep.patch(), "");
}

TEST(Episode, BudgetAndAbort) {
  lmclient::ScriptedClient lm(std::vector<std::string>(10, rktest::reply("look", "ls")));
  LedgerPolicy policy;
  EpisodeConfig cfg;
  cfg.budget = 1;
  Episode ep("t", "i", "w", {{"a.py", "x\n"}}, lm, policy, cfg);
  ep.run();
  EXPECT_EQ(ep.trajectory().status, EpisodeStatus::CostLimit);
  EXPECT_EQ(ep.trajectory().steps.size(), 1u);

  lmclient::ScriptedClient short_lm({rktest::reply("look", "ls")});
  Episode ab("t", "i", "w", {{"a.py", "x\n"}}, short_lm, policy, {});
  ab.run();
  EXPECT_EQ(ab.trajectory().status, EpisodeStatus::Aborted);
  EXPECT_EQ(ab.trajectory().steps.size(), 1u);
  ASSERT_TRUE(ab.trajectory().abort_reason);
  EXPECT_THROW(ab.inject_external_edit({"a.py", 1, 1, "y\n"}), EpisodeClosed);
}

TEST(Episode, InjectionsListedInOrderThenRejectedAfterSubmit) {
  lmclient::ScriptedClient lm({rktest::reply("a", "ls"), rktest::reply("b", "submit")});
  LedgerPolicy policy;
  Episode ep("t", "i", "w", {{"a.py", "1\n2\n3\n"}}, lm, policy, {});
  ep.step();
  ep.inject_external_edit({"a.py", 1, 1, "one\n"});
  ep.inject_external_edit({"a.py", 3, 3, "three\n"});
  EXPECT_THROW(ep.inject_external_edit({"a.py", 4, 4, ""}), InvalidRange);
  ep.step();
  const auto& st = ep.trajectory().steps[1].state;
  ASSERT_EQ(st.external_edits.size(), 2u);
  EXPECT_NE(st.external_edits[0].find("lines 1:1"), std::string::npos);
  EXPECT_NE(st.external_edits[1].find("lines 3:3"), std::string::npos);
  EXPECT_EQ(ep.environment().files().at("a.py"), "one\n2\nthree\n");
  EXPECT_THROW(ep.inject_external_edit({"a.py", 1, 1, "x\n"}), EpisodeClosed);
}

TEST(Episode, NullPolicyContextHasNoStateLines) {
  lmclient::ScriptedClient lm(script("gunzip-ledger.script.json"));
  NullPolicy policy;
  Episode ep("t", "i", "miniscrapy", miniscrapy(), lm, policy, {});
  ep.run();
  for (const auto& m : window_context(ep.trajectory(), policy)) {
    EXPECT_EQ(m.text.find("(Current State:"), std::string::npos);
    EXPECT_EQ(m.text.find("(External Edits:"), std::string::npos);
  }
  EXPECT_TRUE(ep.trajectory().steps.back().state.recent_edits.empty());
}

TEST(Trajectory, ExportShapeAndRoundTrip) {
  lmclient::ScriptedClient lm({rktest::reply("Open it.", "open a.py")});
  LedgerPolicy policy;
  EpisodeConfig cfg;
  cfg.max_steps = 1;
  cfg.model = "test-model";
  Episode ep("t", "i", "w", {{"a.py", "x\n"}}, lm, policy, cfg);
  ep.run();
  Json doc = export_trajectory(ep.trajectory());
  ASSERT_EQ(doc["history"].size(), 2u);
  EXPECT_EQ(doc["history"][0]["role"], "assistant");
  EXPECT_EQ(doc["history"][0]["thought"], "DISCUSSION\nOpen it.\n");
  EXPECT_EQ(doc["history"][0]["action"], "open a.py\n");
  EXPECT_EQ(doc["history"][1]["role"], "user");
  EXPECT_EQ(doc["history"][1]["state"], "{\"working_dir\": \"w\", \"open_file\": \"/w/a.py\", \"recent_edits\": []}");
  EXPECT_EQ(doc["initial_state"], "{\"working_dir\": \"w\", \"open_file\": \"n/a\", \"recent_edits\": []}");
  EXPECT_EQ(doc["model"], "test-model");
  EXPECT_EQ(import_trajectory(doc), ep.trajectory());
  doc["history"][1]["role"] = "assistant";
  EXPECT_THROW(import_trajectory(doc), SchemaError);
}

TEST(Trajectory, ReplayingCassetteIsByteIdentical) {
  rktest::TempDir dir;
  LedgerPolicy policy;
  EpisodeConfig cfg;
  cfg.external_edits = scheduled_edits_from_json(rktest::fixture_json("episodes/gunzip-ledger.external.json"));
  std::string first;
  {
    lmclient::ScriptedClient inner(script("gunzip-ledger.script.json"));
    lmclient::RecordingClient rec(inner, dir.path() / "c.json");
    Episode ep("t", "i", "miniscrapy", miniscrapy(), rec, policy, cfg);
    ep.run();
    first = export_trajectory(ep.trajectory()).dump(2);
  }
  for (int i = 0; i < 2; ++i) {
    lmclient::ReplayClient replay(lmclient::load_cassette(dir.path() / "c.json"));
    Episode ep("t", "i", "miniscrapy", miniscrapy(), replay, policy, cfg);
    ep.run();
    EXPECT_EQ(export_trajectory(ep.trajectory()).dump(2), first);
  }
}

TEST(EpisodeProperty, RandomScriptedEpisodesKeepInvariants) {
  std::mt19937_64 rng(4242);
  LedgerPolicy policy;
  for (int trial = 0; trial < 15; ++trial) {
    auto plan = rktest::random_episode(miniscrapy(), rng, 60);
    rktest::TempDir dir;
    rktest::EpisodeRun recorded;
    {
      lmclient::ScriptedClient inner(plan.replies);
      lmclient::RecordingClient rec(inner, dir.path() / "c.json");
      recorded = rktest::drive(miniscrapy(), plan, rec, policy, 60);
    }
    lmclient::ReplayClient replay(lmclient::load_cassette(dir.path() / "c.json"));
    auto replayed = rktest::drive(miniscrapy(), plan, replay, policy, 60);
    // An unfinished script aborts with a backend-specific reason; everything else must match.
    if (replayed.trajectory.status == EpisodeStatus::Aborted) {
      ASSERT_TRUE(replayed.trajectory.abort_reason);
      EXPECT_TRUE(replayed.trajectory.abort_reason->starts_with("cassette exhausted"));
      replayed.trajectory.abort_reason = recorded.trajectory.abort_reason;
    }
    EXPECT_EQ(trajectory_digest(replayed.trajectory), trajectory_digest(recorded.trajectory));
    EXPECT_EQ(rktest::check_episode(replayed, policy, 5), "") << "trial " << trial;
  }
}
