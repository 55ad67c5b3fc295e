#include "refactorkit/stategym.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace refactorkit::stategym {

namespace {

const std::array<std::string, kCategories> kCategoryNames = {"Electronics", "Books", "Clothing", "Garden", "Games"};
const std::array<std::array<std::string, kProducts>, kCategories> kProductNames = {{
    {"Laptop", "Smartphone", "Headphones"},
    {"Novel", "Biography", "Science Fiction"},
    {"Jeans", "T-Shirt", "Jacket"},
    {"Shovel", "Lawn Mower", "Gloves"},
    {"Board Game", "Video Game", "Puzzle"},
}};
constexpr std::array<Pref, 3> kPrefs = {Pref::Likes, Pref::Dislikes, Pref::NA};

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_quote(char c) { return c == '\'' || c == '"' || c == '`'; }

std::size_t skip(std::string_view s, std::size_t i, bool quotes) {
  while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || (quotes && is_quote(s[i])))) ++i;
  return i;
}

// Position just past "name<quotes/space>:<space>" for an occurrence of name that
// is not part of a longer word; npos when this occurrence is not a key.
std::size_t after_key(std::string_view s, std::size_t at, std::string_view name) {
  if (at > 0 && is_word(s[at - 1])) return std::string_view::npos;
  std::size_t i = at + name.size();
  if (i < s.size() && is_word(s[i])) return std::string_view::npos;
  i = skip(s, i, true);
  if (i >= s.size() || s[i] != ':') return std::string_view::npos;
  return skip(s, i + 1, false);
}

std::optional<Pref> pref_word(std::string_view s, std::size_t i) {
  i = skip(s, i, true);
  std::size_t j = i;
  while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
  std::string w(s.substr(i, j - i));
  std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
  if (w == "likes") return Pref::Likes;
  if (w == "dislikes") return Pref::Dislikes;
  if (w == "na") return Pref::NA;
  return std::nullopt;
}

std::optional<Pref> pref_from(std::string_view s) {
  for (Pref p : kPrefs)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::optional<std::size_t> index_of(const auto& names, std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const std::string& last_user_text(const lmclient::ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it)
    if (it->role == "user") return it->text;
  throw lmclient::LmFailure("no user message");
}

Json state_json(const PreferenceState& s) {
  Json out = Json::object();
  for (std::size_t c = 0; c < kCategories; ++c) {
    Json cat = Json::object();
    for (std::size_t p = 0; p < kProducts; ++p) cat[kProductNames[c][p]] = std::string(to_string(s.at(c, p)));
    out[kCategoryNames[c]] = cat;
  }
  return out;
}

PreferenceState state_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where, "expected an object");
  PreferenceState s;
  for (std::size_t c = 0; c < kCategories; ++c) {
    if (!doc.contains(kCategoryNames[c])) throw SchemaError(where, "missing category " + kCategoryNames[c]);
    const Json& cat = doc.at(kCategoryNames[c]);
    for (std::size_t p = 0; p < kProducts; ++p) {
      const std::string loc = where + "." + kCategoryNames[c] + "." + kProductNames[c][p];
      if (!cat.is_object() || !cat.contains(kProductNames[c][p])) throw SchemaError(loc, "missing");
      const Json& v = cat.at(kProductNames[c][p]);
      auto pref = v.is_string() ? pref_from(v.get<std::string>()) : std::nullopt;
      if (!pref) throw SchemaError(loc, "expected Likes, Dislikes or NA");
      s.set(c, p, *pref);
    }
    if (cat.size() != kProducts) throw SchemaError(where + "." + kCategoryNames[c], "unexpected product");
  }
  if (doc.size() != kCategories) throw SchemaError(where, "unexpected category");
  return s;
}

}  // namespace

std::string_view to_string(Pref p) {
  switch (p) {
    case Pref::Likes: return "Likes";
    case Pref::Dislikes: return "Dislikes";
    case Pref::NA: return "NA";
  }
  return "?";
}

const std::array<std::string, kCategories>& categories() { return kCategoryNames; }
const std::array<std::string, kProducts>& products(std::size_t category) { return kProductNames.at(category); }

std::size_t PreferenceState::matching(const PreferenceState& other) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < kCategories; ++c)
    for (std::size_t p = 0; p < kProducts; ++p) n += grid[c][p] == other.grid[c][p];
  return n;
}

// ---------------------------------------------------------------- generator

PyRandom::PyRandom(std::uint64_t seed) {
  std::vector<std::uint32_t> key;
  for (std::uint64_t s = seed; s; s >>= 32) key.push_back(static_cast<std::uint32_t>(s));
  if (key.empty()) key.push_back(0);

  constexpr std::size_t N = 624;
  mt_[0] = 19650218U;
  for (std::uint32_t i = 1; i < N; ++i) mt_[i] = 1812433253U * (mt_[i - 1] ^ (mt_[i - 1] >> 30)) + i;
  std::size_t i = 1, j = 0;
  for (std::size_t k = std::max(N, key.size()); k; --k) {
    mt_[i] = (mt_[i] ^ ((mt_[i - 1] ^ (mt_[i - 1] >> 30)) * 1664525U)) + key[j] + static_cast<std::uint32_t>(j);
    if (++i >= N) {
      mt_[0] = mt_[N - 1];
      i = 1;
    }
    if (++j >= key.size()) j = 0;
  }
  for (std::size_t k = N - 1; k; --k) {
    mt_[i] = (mt_[i] ^ ((mt_[i - 1] ^ (mt_[i - 1] >> 30)) * 1566083941U)) - static_cast<std::uint32_t>(i);
    if (++i >= N) {
      mt_[0] = mt_[N - 1];
      i = 1;
    }
  }
  mt_[0] = 0x80000000U;
}

void PyRandom::twist() {
  constexpr std::size_t N = 624, M = 397;
  for (std::size_t k = 0; k < N; ++k) {
    const std::uint32_t y = (mt_[k] & 0x80000000U) | (mt_[(k + 1) % N] & 0x7fffffffU);
    mt_[k] = mt_[(k + M) % N] ^ (y >> 1) ^ ((y & 1U) ? 0x9908b0dfU : 0U);
  }
  i_ = 0;
}

std::uint32_t PyRandom::next32() {
  if (i_ >= mt_.size()) twist();
  std::uint32_t y = mt_[i_++];
  y ^= y >> 11;
  y ^= (y << 7) & 0x9d2c5680U;
  y ^= (y << 15) & 0xefc60000U;
  y ^= y >> 18;
  return y;
}

std::uint32_t PyRandom::getrandbits(unsigned k) { return next32() >> (32 - k); }

std::size_t PyRandom::randbelow(std::size_t n) {
  if (n == 0) return 0;
  unsigned k = 0;
  while ((std::size_t{1} << k) <= n) ++k;
  std::size_t r = getrandbits(k);
  while (r >= n) r = getrandbits(k);
  return r;
}

std::vector<SyntheticRun> generate_runs(std::uint64_t seed, std::size_t n_initial, std::size_t per_state,
                                        std::size_t n_actions) {
  if (n_initial == 0 || per_state == 0 || n_actions == 0) throw std::invalid_argument("counts must be at least 1");
  PyRandom rng(seed);
  std::vector<SyntheticRun> runs;
  runs.reserve(n_initial * per_state);
  for (std::size_t s = 0; s < n_initial; ++s) {
    PreferenceState initial;
    for (std::size_t c = 0; c < kCategories; ++c)
      for (std::size_t p = 0; p < kProducts; ++p) initial.set(c, p, kPrefs[rng.randbelow(kPrefs.size())]);
    for (std::size_t t = 0; t < per_state; ++t) {
      SyntheticRun run{seed, runs.size(), initial, {}, {}};
      PreferenceState cur = initial;
      for (std::size_t a = 0; a < n_actions; ++a) {
        PrefAction act;
        act.category = rng.randbelow(kCategories);
        act.product = rng.randbelow(kProducts);
        rng.randbelow(1);  // action type; there is only SetPreference
        act.value = kPrefs[rng.randbelow(kPrefs.size())];
        while (act.value == cur.at(act.category, act.product)) act.value = kPrefs[rng.randbelow(kPrefs.size())];
        cur.set(act.category, act.product, act.value);
        run.actions.push_back(act);
        run.checkpoints.push_back(cur);
      }
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

PreferenceState replay_oracle(const PreferenceState& initial, std::span<const PrefAction> actions) {
  PreferenceState s = initial;
  for (const auto& a : actions) s.set(a.category, a.product, a.value);
  return s;
}

// ---------------------------------------------------------------- prompt

std::string render_state(const PreferenceState& state) {
  std::string out = "{ ";
  for (std::size_t c = 0; c < kCategories; ++c) {
    if (c) out += ", ";
    out += "'" + kCategoryNames[c] + "': { ";
    for (std::size_t p = 0; p < kProducts; ++p) {
      if (p) out += ", ";
      out += "'" + kProductNames[c][p] + "': '" + std::string(to_string(state.at(c, p))) + "'";
    }
    out += " }";
  }
  return out + " }";
}

std::string render_action(std::size_t number, const PrefAction& a) {
  return "Action " + std::to_string(number) + ": " + kCategoryNames[a.category] + " - " +
         kProductNames[a.category][a.product] + " to '" + std::string(to_string(a.value)) + "'.";
}

std::string render_prompt(const PreferenceState& initial, std::span<const PrefAction> actions) {
  std::string out = "Here are your initial preferences on 5 different categories.\nPreferences:\n";
  out += render_state(initial);
  out += "\nHere are the actions in order after that initial state:\n";
  for (std::size_t k = 0; k < actions.size(); ++k) out += render_action(k + 1, actions[k]) + "\n";
  out +=
      "This is the end of the changes. What is the state of preferences on all categories after the actions? "
      "Format your response EXACTLY how I formatted the input initial preferences state. Preferences:";
  return out;
}

ParseError::ParseError(std::string what_missing)
    : std::runtime_error("reply is missing " + what_missing), missing(std::move(what_missing)) {}

PreferenceState parse_reply(std::string_view text) {
  PreferenceState s;
  for (std::size_t c = 0; c < kCategories; ++c) {
    const std::string& cat = kCategoryNames[c];
    std::string_view block;
    bool found = false;
    for (std::size_t at = text.rfind(cat); at != std::string_view::npos && !found;
         at = at ? text.rfind(cat, at - 1) : std::string_view::npos) {
      std::size_t i = after_key(text, at, cat);
      if (i == std::string_view::npos || i >= text.size() || text[i] != '{') continue;
      const std::size_t close = text.find('}', i);
      block = text.substr(i + 1, close == std::string_view::npos ? std::string_view::npos : close - i - 1);
      found = true;
    }
    if (!found) throw ParseError(cat);
    for (std::size_t p = 0; p < kProducts; ++p) {
      const std::string& prod = kProductNames[c][p];
      std::optional<Pref> value;
      for (std::size_t at = block.find(prod); at != std::string_view::npos && !value; at = block.find(prod, at + 1)) {
        std::size_t i = after_key(block, at, prod);
        if (i != std::string_view::npos) value = pref_word(block, i);
      }
      if (!value) throw ParseError(cat + ": " + prod);
      s.set(c, p, *value);
    }
  }
  return s;
}

std::pair<PreferenceState, std::vector<PrefAction>> parse_prompt(std::string_view text) {
  constexpr std::string_view kActionsHeader = "Here are the actions in order after that initial state:\n";
  const std::size_t split = text.find(kActionsHeader);
  if (split == std::string_view::npos) throw ParseError("action list");
  PreferenceState initial = parse_reply(text.substr(0, split));
  std::vector<PrefAction> actions;
  std::string_view rest = text.substr(split + kActionsHeader.size());
  while (rest.starts_with("Action ")) {
    const std::size_t eol = rest.find('\n');
    std::string_view line = rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    const std::size_t colon = line.find(": "), dash = line.find(" - "), to = line.rfind(" to '");
    if (colon == std::string_view::npos || dash == std::string_view::npos || to == std::string_view::npos ||
        !line.ends_with("'."))
      throw ParseError("action " + std::string(line));
    auto c = index_of(kCategoryNames, line.substr(colon + 2, dash - colon - 2));
    if (!c) throw ParseError("category in " + std::string(line));
    auto p = index_of(kProductNames[*c], line.substr(dash + 3, to - dash - 3));
    auto v = pref_from(line.substr(to + 5, line.size() - to - 7));
    if (!p || !v) throw ParseError("product or value in " + std::string(line));
    actions.push_back({*c, *p, *v});
  }
  return {initial, actions};
}

// ---------------------------------------------------------------- scoring

AccuracyTable score(const std::vector<SyntheticRun>& runs, lmclient::Client& lm, const std::vector<std::size_t>& grid,
                    const std::string& model) {
  std::vector<std::size_t> ns = grid;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  AccuracyTable table;
  for (std::size_t n : ns) {
    AccuracyPoint pt;
    pt.n = n;
    double exact = 0, entries = 0;
    for (const auto& run : runs) {
      if (n > run.actions.size()) throw std::invalid_argument("grid value " + std::to_string(n) + " exceeds run length");
      const PreferenceState& truth = n == 0 ? run.initial : run.checkpoints[n - 1];
      lmclient::ChatRequest req{{{"user", render_prompt(run.initial, std::span(run.actions).first(n))}}, 0.0, 512, model};
      ++pt.runs;
      try {
        const PreferenceState got = parse_reply(lm.complete(req).text);
        const std::size_t same = got.matching(truth);
        exact += same == kCategories * kProducts;
        entries += static_cast<double>(same) / (kCategories * kProducts);
      } catch (const ParseError&) {
        ++pt.unparseable;
      } catch (const lmclient::LmFailure&) {
        ++pt.failures;
      }
    }
    pt.exact_match = pt.runs ? exact / static_cast<double>(pt.runs) : 0;
    pt.per_entry = pt.runs ? entries / static_cast<double>(pt.runs) : 0;
    table.push_back(pt);
  }
  return table;
}

AccuracyTable merge(const std::vector<AccuracyTable>& tables) {
  if (tables.empty()) return {};
  AccuracyTable out = tables.front();
  for (auto& pt : out) {
    pt.exact_match *= static_cast<double>(pt.runs);
    pt.per_entry *= static_cast<double>(pt.runs);
  }
  for (std::size_t t = 1; t < tables.size(); ++t) {
    if (tables[t].size() != out.size()) throw std::invalid_argument("tables use different grids");
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& pt = tables[t][i];
      if (pt.n != out[i].n) throw std::invalid_argument("tables use different grids");
      out[i].exact_match += pt.exact_match * static_cast<double>(pt.runs);
      out[i].per_entry += pt.per_entry * static_cast<double>(pt.runs);
      out[i].runs += pt.runs;
      out[i].unparseable += pt.unparseable;
      out[i].failures += pt.failures;
    }
  }
  for (auto& pt : out) {
    if (!pt.runs) continue;
    pt.exact_match /= static_cast<double>(pt.runs);
    pt.per_entry /= static_cast<double>(pt.runs);
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientPoints("need two paired samples");
  return pearson(ranks(x), ranks(y));
}

Trend trend(const AccuracyTable& table) {
  if (table.size() < 3) throw InsufficientPoints("need at least 3 grid points, got " + std::to_string(table.size()));
  std::vector<double> x, y;
  for (const auto& pt : table) {
    x.push_back(static_cast<double>(pt.n));
    y.push_back(pt.exact_match);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return {sxx == 0 ? 0.0 : sxy / sxx, spearman(x, y)};
}

// ---------------------------------------------------------------- simulated models

std::unique_ptr<lmclient::FunctionClient> oracle_lm() {
  return std::make_unique<lmclient::FunctionClient>("oracle", [](const lmclient::ChatRequest& req) {
    auto [initial, actions] = parse_prompt(last_user_text(req));
    return render_state(replay_oracle(initial, actions));
  });
}

std::unique_ptr<lmclient::FunctionClient> lossy_lm(double p, std::uint64_t seed) {
  return std::make_unique<lmclient::FunctionClient>("lossy", [p, seed](const lmclient::ChatRequest& req) {
    const std::string& prompt = last_user_text(req);
    // sha256:<hex>; 16 hex digits are plenty of per-prompt entropy.
    std::uint64_t mix = seed ^ std::stoull(sha256_digest(prompt).substr(7, 16), nullptr, 16);
    std::mt19937_64 rng(splitmix(mix));
    auto [state, actions] = parse_prompt(prompt);
    for (const auto& a : actions)
      if (static_cast<double>(rng() >> 11) * 0x1.0p-53 >= p) state.set(a.category, a.product, a.value);
    return render_state(state);
  });
}

std::unique_ptr<lmclient::FunctionClient> echo_lm() {
  return std::make_unique<lmclient::FunctionClient>("echo", [](const lmclient::ChatRequest& req) {
    return render_state(parse_prompt(last_user_text(req)).first);
  });
}

// ---------------------------------------------------------------- files

Json runs_json(const std::vector<SyntheticRun>& runs, std::uint64_t seed) {
  Json doc = {{"schema_version", kRunsSchemaVersion}, {"generator", kGenerator}, {"seed", seed}};
  Json list = Json::array();
  for (const auto& r : runs) {
    Json actions = Json::array(), checkpoints = Json::array();
    for (const auto& a : r.actions)
      actions.push_back({{"category", kCategoryNames[a.category]},
                         {"product", kProductNames[a.category][a.product]},
                         {"new_preference", to_string(a.value)}});
    for (const auto& c : r.checkpoints) checkpoints.push_back(state_json(c));
    list.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"initial", state_json(r.initial)},
                    {"actions", actions},
                    {"checkpoints", checkpoints}});
  }
  doc["runs"] = list;
  return doc;
}

std::vector<SyntheticRun> runs_from_json(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("$", "expected an object");
  reject_unknown_keys(doc, {"schema_version", "generator", "seed", "runs"}, "$");
  if (doc.value("schema_version", "") != kRunsSchemaVersion)
    throw SchemaError("$.schema_version", "expected " + std::string(kRunsSchemaVersion));
  if (!doc.contains("runs") || !doc["runs"].is_array()) throw SchemaError("$.runs", "expected an array");
  std::vector<SyntheticRun> out;
  for (std::size_t i = 0; i < doc["runs"].size(); ++i) {
    const Json& r = doc["runs"][i];
    const std::string loc = "$.runs[" + std::to_string(i) + "]";
    if (!r.is_object()) throw SchemaError(loc, "expected an object");
    reject_unknown_keys(r, {"index", "seed", "initial", "actions", "checkpoints"}, loc);
    SyntheticRun run;
    try {
      run.index = r.at("index").get<std::size_t>();
      run.seed = r.at("seed").get<std::uint64_t>();
    } catch (const Json::exception& e) {
      throw SchemaError(loc, e.what());
    }
    if (!r.contains("initial")) throw SchemaError(loc + ".initial", "missing");
    run.initial = state_from_json(r["initial"], loc + ".initial");
    if (!r.contains("actions") || !r["actions"].is_array()) throw SchemaError(loc + ".actions", "expected an array");
    PreferenceState cur = run.initial;
    for (std::size_t k = 0; k < r["actions"].size(); ++k) {
      const Json& a = r["actions"][k];
      const std::string aloc = loc + ".actions[" + std::to_string(k) + "]";
      if (!a.is_object()) throw SchemaError(aloc, "expected an object");
      reject_unknown_keys(a, {"category", "product", "new_preference"}, aloc);
      auto c = index_of(kCategoryNames, a.value("category", ""));
      if (!c) throw SchemaError(aloc + ".category", "unknown category");
      auto p = index_of(kProductNames[*c], a.value("product", ""));
      if (!p) throw SchemaError(aloc + ".product", "unknown product");
      auto v = pref_from(a.value("new_preference", ""));
      if (!v) throw SchemaError(aloc + ".new_preference", "expected Likes, Dislikes or NA");
      if (cur.at(*c, *p) == *v) throw SchemaError(aloc, "action does not change the preference");
      cur.set(*c, *p, *v);
      run.actions.push_back({*c, *p, *v});
    }
    if (!r.contains("checkpoints") || !r["checkpoints"].is_array() || r["checkpoints"].size() != run.actions.size())
      throw SchemaError(loc + ".checkpoints", "expected one checkpoint per action");
    for (std::size_t k = 0; k < run.actions.size(); ++k) {
      run.checkpoints.push_back(state_from_json(r["checkpoints"][k], loc + ".checkpoints[" + std::to_string(k) + "]"));
      if (run.checkpoints.back() != replay_oracle(run.initial, std::span(run.actions).first(k + 1)))
        throw SchemaError(loc + ".checkpoints[" + std::to_string(k) + "]", "does not match the replayed actions");
    }
    out.push_back(std::move(run));
  }
  return out;
}

std::string runs_digest(const std::vector<SyntheticRun>& runs) {
  return sha256_digest(runs_json(runs, runs.empty() ? 0 : runs.front().seed).dump());
}

Json table_json(const AccuracyTable& table, const Trend* t) {
  Json points = Json::array();
  for (const auto& pt : table)
    points.push_back({{"n", pt.n},
                      {"exact_match", pt.exact_match},
                      {"per_entry", pt.per_entry},
                      {"runs", pt.runs},
                      {"unparseable", pt.unparseable},
                      {"failures", pt.failures}});
  Json doc = {{"schema_version", kTableSchemaVersion}, {"points", points}};
  if (t) doc["trend"] = {{"slope", t->slope}, {"rank_correlation", t->rank_correlation}};
  return doc;
}

}  // namespace refactorkit::stategym
