#pragma once

// Randomized scripted episodes over the miniscrapy snapshot, replayed from a
// recorded cassette. Shared by the unit tests and the acceptance binary.

#include <random>
#include <set>
#include <sstream>

#include "refactorkit/harness.hpp"

namespace rktest {

using refactorkit::evaluator::FileMap;
namespace h = refactorkit::harness;
namespace lm = refactorkit::lmclient;

inline std::string reply(const std::string& thought, const std::string& command) {
  return "DISCUSSION\n" + thought + "\n```\n" + command + "\n```";
}

struct Injection {
  std::size_t before_step;  // injected once this many steps have completed
  h::ExternalEdit edit;
};

struct RandomEpisode {
  std::vector<std::string> replies;
  std::vector<Injection> injections;
};

// Replies are drawn against a shadow of the open file's length so most edits land,
// and ranges repeat often enough for dedup to matter. Injections are planned on
// files the script never edits, so their ranges stay valid.
inline RandomEpisode random_episode(const FileMap& files, std::mt19937_64& rng, std::size_t max_steps) {
  std::vector<std::string> paths;
  for (const auto& [p, t] : files) paths.push_back(p);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const std::size_t steps = 5 + pick(max_steps - 5);

  std::vector<std::string> editable(paths.begin(), paths.end());
  std::shuffle(editable.begin(), editable.end(), rng);
  const std::string untouched = editable.back();
  editable.pop_back();
  editable.resize(std::min<std::size_t>(editable.size(), 3));

  RandomEpisode ep;
  std::vector<std::pair<std::size_t, std::size_t>> used;
  for (std::size_t i = 0; i + 1 < steps; ++i) {
    switch (pick(10)) {
      case 0: ep.replies.push_back(reply("Look around.", pick(2) ? "ls -F" : "ls scrapy")); break;
      case 1: ep.replies.push_back(reply("Search.", "search_dir gunzip")); break;
      case 2: ep.replies.push_back(reply("Jump.", "goto " + std::to_string(1 + pick(30)))); break;
      case 3: ep.replies.push_back(reply("Scroll.", pick(2) ? "scroll_down" : "scroll_up")); break;
      case 4:
        ep.replies.push_back(pick(2) ? "I forgot the command block."
                                     : "DISCUSSION\ntwo at once\n```\nls\n```\n```\npwd\n```");
        break;
      case 5:
      case 6: ep.replies.push_back(reply("Open a file.", "open " + editable[pick(editable.size())])); break;
      default: {
        std::size_t a, b;
        if (!used.empty() && pick(3) == 0) {
          std::tie(a, b) = used[pick(used.size())];
        } else {
          a = 1 + pick(12);
          b = a + pick(3);
          used.emplace_back(a, b);
        }
        std::string body;
        for (std::size_t k = 0, n = pick(3); k < n; ++k) body += "x_" + std::to_string(i) + "_" + std::to_string(k) + " = 1\n";
        ep.replies.push_back(reply("Edit.", "edit " + std::to_string(a) + ":" + std::to_string(b) + "\n" + body + "end_of_edit"));
      }
    }
  }
  if (pick(4)) ep.replies.push_back(reply("Done.", "submit"));

  const std::size_t untouched_lines = refactorkit::split_lines(files.at(untouched)).size();
  for (std::size_t k = 0, n = 1 + pick(2); k < n && untouched_lines > 0; ++k) {
    const std::size_t a = 1 + pick(untouched_lines);
    ep.injections.push_back({pick(steps), {untouched, a, a, "# external " + std::to_string(k) + "\n"}});
  }
  std::sort(ep.injections.begin(), ep.injections.end(),
            [](const Injection& x, const Injection& y) { return x.before_step < y.before_step; });
  return ep;
}

struct EpisodeRun {
  h::Trajectory trajectory;
  std::string patch;
  std::vector<std::pair<std::size_t, h::ExternalEdit>> injected;  // (steps completed, edit)
};

inline EpisodeRun drive(const FileMap& files, const RandomEpisode& plan, lm::Client& client,
                        const h::StatePolicy& policy, std::size_t max_steps) {
  h::EpisodeConfig cfg;
  cfg.window = 5;
  cfg.max_steps = max_steps;
  cfg.model = "scripted";
  h::Episode ep("random", "Refactor gunzip.", "miniscrapy", files, client, policy, cfg);
  EpisodeRun out;
  std::size_t next = 0;
  while (!ep.done()) {
    while (next < plan.injections.size() && plan.injections[next].before_step <= ep.trajectory().steps.size()) {
      ep.inject_external_edit(plan.injections[next].edit);
      out.injected.emplace_back(ep.trajectory().steps.size(), plan.injections[next].edit);
      ++next;
    }
    if (!ep.step()) break;
  }
  out.trajectory = ep.trajectory();
  out.patch = ep.patch();
  return out;
}

// Property checks (a)-(d); returns a description of the first violation, or "".
inline std::string check_episode(const EpisodeRun& run, const h::StatePolicy& policy, std::size_t window) {
  const auto& t = run.trajectory;
  if (!h::states_recompute(t, policy)) return "state does not recompute from its prefix";
  if (!h::states_recompute(h::import_trajectory(h::export_trajectory(t)), policy))
    return "state does not recompute after export/import";

  // Brute-force first-occurrence ledger.
  std::vector<std::string> expect;
  for (std::size_t n = 0; n < t.steps.size(); ++n) {
    const auto& e = t.steps[n].observation.edit;
    if (e) {
      const std::string line = "Edited " + e->file + " at lines " + std::to_string(e->line_start) + ":" +
                               std::to_string(e->line_end);
      if (std::find(expect.begin(), expect.end(), line) == expect.end()) expect.push_back(line);
    }
    if (t.steps[n].state.recent_edits != expect) return "ledger differs from first-occurrence order at step " + std::to_string(n + 1);
  }

  h::Trajectory prefix = t;
  for (std::size_t n = 0; n <= t.steps.size(); ++n) {
    prefix.steps.assign(t.steps.begin(), t.steps.begin() + static_cast<std::ptrdiff_t>(n));
    auto msgs = h::window_context(prefix, policy);
    std::size_t verbatim = 0;
    for (std::size_t i = 3; i < msgs.size(); i += 2)
      if (!msgs[i].text.starts_with("Old environment output: (")) ++verbatim;
    if (verbatim > window) return "window holds " + std::to_string(verbatim) + " verbatim observations";
    if (verbatim != std::min(n, window)) return "window count off at N=" + std::to_string(n);
  }

  for (const auto& [done, edit] : run.injected) {
    if (done >= t.steps.size()) continue;  // episode ended before the next state
    const auto& st = t.steps[done].state;
    const std::string want = h::render_external(edit);
    if (std::find(st.external_edits.begin(), st.external_edits.end(), want) == st.external_edits.end())
      return "external edit missing from state " + std::to_string(done + 1);
    if (policy.render(st).find("(External Edits: ") != 0) return "state block does not lead with external edits";
    for (std::size_t later = done + 1; later < t.steps.size(); ++later)
      for (const auto& e : t.steps[later].state.external_edits)
        if (e == want && std::count_if(run.injected.begin(), run.injected.end(),
                                       [&](const auto& x) { return x.first == later && h::render_external(x.second) == want; }) == 0)
          return "external edit repeated in a later state";
  }
  return "";
}

}  // namespace rktest
