#pragma once

// Second implementation of the replay and the figure's worked example, shared by
// the unit tests and the acceptance binary.

#include <map>

#include "refactorkit/stategym.hpp"

namespace rktest {

namespace sg = refactorkit::stategym;

// Name-keyed, string-valued; deliberately nothing like the indexed grid.
using NaiveState = std::map<std::string, std::map<std::string, std::string>>;

inline NaiveState naive(const sg::PreferenceState& s) {
  NaiveState out;
  for (std::size_t c = 0; c < sg::kCategories; ++c)
    for (std::size_t p = 0; p < sg::kProducts; ++p)
      out[sg::categories()[c]][sg::products(c)[p]] = std::string(sg::to_string(s.at(c, p)));
  return out;
}

/// "" when every checkpoint and the no-op rule agree with a naive replay.
inline std::string naive_check(const sg::SyntheticRun& run) {
  NaiveState cur = naive(run.initial);
  for (std::size_t k = 0; k < run.actions.size(); ++k) {
    const auto& a = run.actions[k];
    std::string& slot = cur[sg::categories()[a.category]][sg::products(a.category)[a.product]];
    const std::string value(sg::to_string(a.value));
    if (slot == value) return "run " + std::to_string(run.index) + " action " + std::to_string(k + 1) + " is a no-op";
    slot = value;
    if (k >= run.checkpoints.size() || naive(run.checkpoints[k]) != cur)
      return "run " + std::to_string(run.index) + " checkpoint " + std::to_string(k + 1) + " differs";
  }
  if (run.checkpoints.size() != run.actions.size()) return "checkpoint count differs";
  return "";
}

// The reconstruction figure. Its elided middle actions are filled with the two
// changes the desired answer shows beyond Actions 1 and N.
inline const std::string kFigureInitial =
    "{ 'Electronics': { 'Laptop': 'Likes', 'Smartphone': 'Likes', 'Headphones': 'Dislikes' }, 'Books': { 'Novel': "
    "'Dislikes', 'Biography': 'NA', 'Science Fiction': 'Dislikes' }, 'Clothing': { 'Jeans': 'Likes', 'T-Shirt': "
    "'Likes', 'Jacket': 'Likes' }, 'Garden': { 'Shovel': 'Likes', 'Lawn Mower': 'NA', 'Gloves': 'NA' }, 'Games': { "
    "'Board Game': 'Likes', 'Video Game': 'Likes', 'Puzzle': 'Likes' } }";
inline const std::string kFigureDesired =
    "{ 'Electronics': { 'Laptop': 'NA', 'Smartphone': 'Likes', 'Headphones': 'Dislikes' }, 'Books': { 'Novel': "
    "'Dislikes', 'Biography': 'NA', 'Science Fiction': 'Dislikes' }, 'Clothing': { 'Jeans': 'Likes', 'T-Shirt': 'NA', "
    "'Jacket': 'Likes' }, 'Garden': { 'Shovel': 'Likes', 'Lawn Mower': 'Dislikes', 'Gloves': 'NA' }, 'Games': { "
    "'Board Game': 'Likes', 'Video Game': 'Dislikes', 'Puzzle': 'Likes' } }";

inline std::vector<sg::PrefAction> figure_actions() {
  return {{0, 0, sg::Pref::NA}, {3, 1, sg::Pref::Dislikes}, {4, 1, sg::Pref::Dislikes}, {2, 1, sg::Pref::NA}};
}

/// "" when replaying the figure's actions gives its desired answer.
inline std::string figure_check() {
  const auto initial = sg::parse_reply(kFigureInitial);
  const auto actions = figure_actions();
  const std::string prompt = sg::render_prompt(initial, actions);
  if (prompt.find("Action 1: Electronics - Laptop to 'NA'.\n") == std::string::npos) return "Action 1 line differs";
  if (prompt.find("Action 4: Clothing - T-Shirt to 'NA'.\n") == std::string::npos) return "Action N line differs";
  const auto final_state = sg::replay_oracle(initial, actions);
  if (final_state != sg::parse_reply(kFigureDesired)) return "replay differs from the desired answer";
  if (sg::render_state(final_state) != kFigureDesired) return "rendered answer differs from the desired answer text";
  return "";
}

/// Lossy model over `seeds` generator seeds, 25 runs each.
inline sg::AccuracyTable lossy_sweep(double p, std::size_t seeds, const std::vector<std::size_t>& grid) {
  std::vector<sg::AccuracyTable> tables;
  for (std::size_t s = 0; s < seeds; ++s) {
    auto lm = sg::lossy_lm(p, 10'000 + s);
    tables.push_back(sg::score(sg::generate_runs(s, 5, 5, 50), *lm, grid));
  }
  return sg::merge(tables);
}

}  // namespace rktest
