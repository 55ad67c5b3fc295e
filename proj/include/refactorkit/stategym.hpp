#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "refactorkit/common.hpp"
#include "refactorkit/lmclient.hpp"

namespace refactorkit::stategym {

inline constexpr std::string_view kRunsSchemaVersion = "refactorkit.runs/1";
inline constexpr std::string_view kTableSchemaVersion = "refactorkit.stategym/1";
/// Same stream as CPython's random.seed(int) + random.choice.
inline constexpr std::string_view kGenerator = "python-mt19937/v1";

inline constexpr std::size_t kCategories = 5;
inline constexpr std::size_t kProducts = 3;

enum class Pref : std::uint8_t { Likes, Dislikes, NA };

std::string_view to_string(Pref p);
const std::array<std::string, kCategories>& categories();
const std::array<std::string, kProducts>& products(std::size_t category);

struct PreferenceState {
  std::array<std::array<Pref, kProducts>, kCategories> grid{};

  Pref at(std::size_t category, std::size_t product) const { return grid[category][product]; }
  void set(std::size_t category, std::size_t product, Pref p) { grid[category][product] = p; }
  std::size_t matching(const PreferenceState& other) const;
  friend bool operator==(const PreferenceState&, const PreferenceState&) = default;
};

struct PrefAction {
  std::size_t category = 0;
  std::size_t product = 0;
  Pref value = Pref::Likes;
  friend bool operator==(const PrefAction&, const PrefAction&) = default;
};

struct SyntheticRun {
  std::uint64_t seed = 0;
  std::size_t index = 0;  // position in the generated batch
  PreferenceState initial;
  std::vector<PrefAction> actions;
  std::vector<PreferenceState> checkpoints;  // state after actions[0..k]
  friend bool operator==(const SyntheticRun&, const SyntheticRun&) = default;
};

/// MT19937 seeded like CPython: init_by_array over the seed's 32-bit words.
class PyRandom {
 public:
  explicit PyRandom(std::uint64_t seed);
  std::uint32_t next32();
  std::uint32_t getrandbits(unsigned k);  // 1 <= k <= 32
  std::size_t randbelow(std::size_t n);

 private:
  void twist();
  std::array<std::uint32_t, 624> mt_{};
  std::size_t i_ = 624;
};

/// n_initial initial states, per_state runs from each, n_actions actions per run.
std::vector<SyntheticRun> generate_runs(std::uint64_t seed, std::size_t n_initial = 50, std::size_t per_state = 5,
                                        std::size_t n_actions = 50);

PreferenceState replay_oracle(const PreferenceState& initial, std::span<const PrefAction> actions);

/// "{ 'Electronics': { 'Laptop': 'Likes', ... }, ... }"
std::string render_state(const PreferenceState& state);
std::string render_action(std::size_t number, const PrefAction& action);
std::string render_prompt(const PreferenceState& initial, std::span<const PrefAction> actions);

struct ParseError : std::runtime_error {
  std::string missing;  // "Garden" or "Garden: Lawn Mower"
  explicit ParseError(std::string what_missing);
};

/// Lenient: finds each category block by name (last occurrence wins), then each
/// product inside it. Quotes, spacing and value case are not significant.
PreferenceState parse_reply(std::string_view text);
/// Inverse of render_prompt.
std::pair<PreferenceState, std::vector<PrefAction>> parse_prompt(std::string_view text);

// ---------------------------------------------------------------- scoring

struct AccuracyPoint {
  std::size_t n = 0;
  double exact_match = 0;
  double per_entry = 0;
  std::size_t runs = 0;
  std::size_t unparseable = 0;
  std::size_t failures = 0;  // LmFailure, scored as unparseable
  friend bool operator==(const AccuracyPoint&, const AccuracyPoint&) = default;
};

using AccuracyTable = std::vector<AccuracyPoint>;  // ascending n

/// Throws std::invalid_argument when a grid value exceeds a run's length.
AccuracyTable score(const std::vector<SyntheticRun>& runs, lmclient::Client& lm, const std::vector<std::size_t>& grid,
                    const std::string& model = "");
/// Run-weighted mean of tables over the same grid.
AccuracyTable merge(const std::vector<AccuracyTable>& tables);

struct InsufficientPoints : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Trend {
  double slope = 0;
  double rank_correlation = 0;
};

/// Least-squares slope of exact_match on n and Spearman's rho (average ranks;
/// 0 when either side is constant).
Trend trend(const AccuracyTable& table);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------- simulated models

std::unique_ptr<lmclient::FunctionClient> oracle_lm();
/// Replays the prompt but skips each action independently with probability p.
/// The draw is seeded by `seed` and the prompt, so replies do not depend on call order.
std::unique_ptr<lmclient::FunctionClient> lossy_lm(double p, std::uint64_t seed);
/// Returns the initial state block unchanged.
std::unique_ptr<lmclient::FunctionClient> echo_lm();

// ---------------------------------------------------------------- files

Json runs_json(const std::vector<SyntheticRun>& runs, std::uint64_t seed);
std::vector<SyntheticRun> runs_from_json(const Json& document);  // throws SchemaError
std::string runs_digest(const std::vector<SyntheticRun>& runs);
Json table_json(const AccuracyTable& table, const Trend* trend = nullptr);

}  // namespace refactorkit::stategym
