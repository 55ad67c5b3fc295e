#include <gtest/gtest.h>

#include <random>

#include "refactorkit/stategym.hpp"
#include "stategym_checks.hpp"
#include "support.hpp"

using namespace refactorkit;
using namespace refactorkit::stategym;

namespace {

const std::vector<std::size_t> kGrid = {0, 10, 20, 30, 40, 50};

PreferenceState random_state(std::mt19937_64& rng) {
  PreferenceState s;
  for (std::size_t c = 0; c < kCategories; ++c)
    for (std::size_t p = 0; p < kProducts; ++p) s.set(c, p, static_cast<Pref>(rng() % 3));
  return s;
}

}  // namespace

TEST(PyRandom, MatchesCPythonStream) {
  // random.seed(s); [random.getrandbits(32) for _ in range(3)]
  PyRandom zero(0);
  EXPECT_EQ(zero.next32(), 3626764237u);
  EXPECT_EQ(zero.next32(), 1654615998u);
  EXPECT_EQ(zero.next32(), 3255389356u);
  PyRandom big(1ULL << 40);
  PyRandom big2(1ULL << 40);
  EXPECT_EQ(big.next32(), big2.next32());
}

TEST(Generate, DefaultsGiveTwoHundredFiftyRunsOfFifty) {
  auto runs = generate_runs(0);
  ASSERT_EQ(runs.size(), 250u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.actions.size(), 50u);
    EXPECT_EQ(r.checkpoints.size(), 50u);
  }
  // Five runs share each initial state.
  EXPECT_EQ(runs[0].initial, runs[4].initial);
  EXPECT_THROW(generate_runs(0, 0), std::invalid_argument);
}

TEST(Generate, MatchesPublishedGeneratorUnderSameSeed) {
  auto want = runs_from_json(rktest::fixture_json("expected/stategym-seed7.runs.json"));
  auto got = generate_runs(7, 3, 2, 10);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i]) << i;
}

TEST(Generate, SeedDeterminism) {
  EXPECT_EQ(runs_digest(generate_runs(3, 4, 2, 20)), runs_digest(generate_runs(3, 4, 2, 20)));
  EXPECT_NE(runs_digest(generate_runs(3, 4, 2, 20)), runs_digest(generate_runs(4, 4, 2, 20)));
}

TEST(Generate, NoNoOpsAndCheckpointsAgreeWithNaiveReplay) {
  auto runs = generate_runs(11, 200, 5, 50);
  ASSERT_EQ(runs.size(), 1000u);
  for (const auto& r : runs) ASSERT_EQ(rktest::naive_check(r), "");
  for (const auto& r : runs)
    for (std::size_t k = 0; k < r.actions.size(); ++k)
      ASSERT_EQ(r.checkpoints[k], replay_oracle(r.initial, std::span(r.actions).first(k + 1)));
}

TEST(Replay, EmptyPrefixIsInitial) {
  std::mt19937_64 rng(1);
  auto s = random_state(rng);
  EXPECT_EQ(replay_oracle(s, {}), s);
}

TEST(Figure, WorkedExampleReachesDesiredAnswer) { EXPECT_EQ(rktest::figure_check(), ""); }

TEST(Prompt, TemplateText) {
  const auto initial = parse_reply(rktest::kFigureInitial);
  EXPECT_EQ(render_prompt(initial, {}),
            "Here are your initial preferences on 5 different categories.\nPreferences:\n" + rktest::kFigureInitial +
                "\nHere are the actions in order after that initial state:\n"
                "This is the end of the changes. What is the state of preferences on all categories after the actions? "
                "Format your response EXACTLY how I formatted the input initial preferences state. Preferences:");
  auto actions = rktest::figure_actions();
  const std::string two = render_prompt(initial, std::span(actions).first(2));
  const auto a1 = two.find("\nAction 1: Electronics - Laptop to 'NA'.\n");
  const auto a2 = two.find("\nAction 2: Garden - Lawn Mower to 'Dislikes'.\n");
  ASSERT_NE(a1, std::string::npos);
  ASSERT_NE(a2, std::string::npos);
  EXPECT_LT(a1, a2);
  EXPECT_EQ(two.find("Action 3"), std::string::npos);
  auto [s, back] = parse_prompt(two);
  EXPECT_EQ(s, initial);
  EXPECT_EQ(back, std::vector<PrefAction>(actions.begin(), actions.begin() + 2));
}

TEST(Parse, RoundTripOverRandomStates) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto s = random_state(rng);
    ASSERT_EQ(parse_reply(render_state(s)), s);
    ASSERT_EQ(parse_prompt(render_prompt(s, {})).first, s);
  }
}

TEST(Parse, LenientQuotesSpacingAndCase) {
  std::string dq = rktest::kFigureDesired;
  std::replace(dq.begin(), dq.end(), '\'', '"');
  EXPECT_EQ(parse_reply(dq), parse_reply(rktest::kFigureDesired));
  const std::string loose =
      "Sure! Preferences:\n{\n  Electronics: {Laptop: na, Smartphone :likes, Headphones: 'Dislikes'},\n"
      "  'Books' : { 'Novel':'Dislikes','Biography':'NA','Science Fiction':'Dislikes' },\n"
      "  'Clothing': { 'Jeans': 'Likes', 'T-Shirt': 'NA', 'Jacket': 'Likes' },\n"
      "  'Garden': { 'Shovel': 'Likes', 'Lawn Mower': 'Dislikes', 'Gloves': 'NA' },\n"
      "  'Games': { 'Board Game': 'Likes', 'Video Game': 'Dislikes', 'Puzzle': 'Likes' }\n}";
  EXPECT_EQ(parse_reply(loose), parse_reply(rktest::kFigureDesired));
}

TEST(Parse, LastBlockWins) {
  const std::string both = "Initially " + rktest::kFigureInitial + "\nAfter: " + rktest::kFigureDesired;
  EXPECT_EQ(parse_reply(both), parse_reply(rktest::kFigureDesired));
}

TEST(Parse, MissingCategoryOrProductIsNamed) {
  std::string no_garden = rktest::kFigureDesired;
  const auto g = no_garden.find("'Garden'");
  no_garden.erase(g, no_garden.find("'Games'") - g);
  try {
    parse_reply(no_garden);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.missing, "Garden");
  }
  std::string no_gloves = rktest::kFigureDesired;
  no_gloves.erase(no_gloves.find(", 'Gloves': 'NA'"), 15);
  try {
    parse_reply(no_gloves);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.missing, "Garden: Gloves");
  }
  EXPECT_THROW(parse_reply("I don't know."), ParseError);
  std::string bad_value = rktest::kFigureDesired;
  bad_value.replace(bad_value.find("'Puzzle': 'Likes'"), 17, "'Puzzle': 'Maybe'");
  EXPECT_THROW(parse_reply(bad_value), ParseError);
}

TEST(Score, OracleIsPerfectEverywhere) {
  auto lm = oracle_lm();
  auto table = score(generate_runs(2, 10, 5, 50), *lm, kGrid);
  ASSERT_EQ(table.size(), kGrid.size());
  for (const auto& pt : table) {
    EXPECT_EQ(pt.exact_match, 1.0) << pt.n;
    EXPECT_EQ(pt.per_entry, 1.0) << pt.n;
    EXPECT_EQ(pt.runs, 50u);
  }
  auto t = trend(table);
  EXPECT_EQ(t.slope, 0.0);
  EXPECT_EQ(t.rank_correlation, 0.0);
}

TEST(Score, EchoIsExactAtZeroOnly) {
  auto lm = echo_lm();
  auto table = score(generate_runs(2, 4, 5, 50), *lm, {0, 10});
  EXPECT_EQ(table[0].exact_match, 1.0);
  EXPECT_LT(table[1].exact_match, 0.5);
}

TEST(Score, UnparseableAndFailuresScoreZero) {
  lmclient::FunctionClient junk("junk", [](const lmclient::ChatRequest&) { return std::string("no idea"); });
  auto runs = generate_runs(2, 1, 2, 5);
  auto table = score(runs, junk, {0, 5});
  EXPECT_EQ(table[0].unparseable, 2u);
  EXPECT_EQ(table[0].exact_match, 0.0);
  EXPECT_EQ(table[0].per_entry, 0.0);
  lmclient::ScriptedClient short_script({render_state(runs[0].initial)});
  auto t2 = score(runs, short_script, {0});
  EXPECT_EQ(t2[0].failures, 1u);
  EXPECT_EQ(t2[0].exact_match, 0.5);
  EXPECT_THROW(score(runs, junk, {6}), std::invalid_argument);
}

TEST(Score, LossyModelMatchesMonteCarloCurve) {
  auto curve = rktest::fixture_json("expected/stategym-lossy-curve.json");
  auto table = rktest::lossy_sweep(0.02, 100, kGrid);
  ASSERT_EQ(table.size(), curve["points"].size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    EXPECT_EQ(table[i].runs, 2500u);
    EXPECT_NEAR(table[i].exact_match, curve["points"][i]["exact_match"].get<double>(), 0.04) << table[i].n;
    EXPECT_NEAR(table[i].per_entry, curve["points"][i]["per_entry"].get<double>(), 0.005) << table[i].n;
  }
  auto t = trend(table);
  EXPECT_LT(t.slope, 0.0);
  EXPECT_LE(t.rank_correlation, -0.8);
}

TEST(Score, LossyRepliesDoNotDependOnCallOrder) {
  auto runs = generate_runs(9, 2, 5, 50);
  auto a = lossy_lm(0.1, 3), b = lossy_lm(0.1, 3);
  auto fwd = score(runs, *a, kGrid);
  std::vector<SyntheticRun> rev(runs.rbegin(), runs.rend());
  auto back = score(rev, *b, {50, 40, 30, 20, 10, 0});
  ASSERT_EQ(back.size(), fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    EXPECT_EQ(back[i].exact_match, fwd[i].exact_match);
    EXPECT_NEAR(back[i].per_entry, fwd[i].per_entry, 1e-12);
  }
}

TEST(Trend, KnownTables) {
  AccuracyTable constant = {{0, 0.5, 0.5, 1, 0, 0}, {10, 0.5, 0.5, 1, 0, 0}, {20, 0.5, 0.5, 1, 0, 0}};
  EXPECT_EQ(trend(constant).slope, 0.0);
  EXPECT_EQ(trend(constant).rank_correlation, 0.0);
  AccuracyTable falling = {{0, 1.0, 1, 1, 0, 0}, {10, 0.9, 1, 1, 0, 0}, {20, 0.5, 1, 1, 0, 0}, {30, 0.1, 1, 1, 0, 0}};
  EXPECT_DOUBLE_EQ(trend(falling).rank_correlation, -1.0);
  EXPECT_NEAR(trend(falling).slope, -0.031, 1e-12);
  EXPECT_THROW(trend({constant[0], constant[1]}), InsufficientPoints);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 2, 3}, {1, 2, 2, 3}), 1.0);
}

TEST(Files, RunsRoundTripAndValidation) {
  auto runs = generate_runs(4, 2, 2, 6);
  Json doc = runs_json(runs, 4);
  EXPECT_EQ(runs_from_json(doc), runs);
  EXPECT_EQ(runs_from_json(Json::parse(doc.dump())), runs);
  Json noop = doc;
  noop["runs"][0]["actions"][0]["new_preference"] =
      noop["runs"][0]["initial"][noop["runs"][0]["actions"][0]["category"].get<std::string>()]
          [noop["runs"][0]["actions"][0]["product"].get<std::string>()];
  EXPECT_THROW(runs_from_json(noop), SchemaError);
  Json stale = doc;
  stale["runs"][1]["checkpoints"][5] = stale["runs"][1]["initial"];
  if (runs[1].checkpoints[5] != runs[1].initial) {
    EXPECT_THROW(runs_from_json(stale), SchemaError);
  }
  Json extra = doc;
  extra["colour"] = 1;
  EXPECT_THROW(runs_from_json(extra), SchemaError);
  EXPECT_EQ(table_json({{0, 1, 1, 1, 0, 0}})["schema_version"], "refactorkit.stategym/1");
}
