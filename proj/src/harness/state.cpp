#include <set>

#include "refactorkit/harness.hpp"

namespace refactorkit::harness {

namespace {

std::string json_str(const std::string& s) { return Json(s).dump(-1, ' ', true); }

std::string json_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + json_str(items[i]);
  return out + "]";
}

StateSummary prompt_state(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior) {
  StateSummary s;
  if (!prefix.empty()) {
    s.working_dir = prefix.back().observation.working_dir;
    s.open_file = prefix.back().observation.open_file;
  } else if (!prior.empty()) {
    s.working_dir = prior.back().working_dir;
    s.open_file = prior.back().open_file;
  }
  return s;
}

}  // namespace

std::string state_document(const StateSummary& s) {
  std::string out = "{\"working_dir\": " + json_str(s.working_dir) + ", \"open_file\": " + json_str(s.open_file) +
                    ", \"recent_edits\": " + json_list(s.recent_edits);
  if (!s.external_edits.empty()) out += ", \"external_edits\": " + json_list(s.external_edits);
  return out + "}";
}

StateSummary state_from_document(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("state", e.what());
  }
  if (!doc.is_object()) throw SchemaError("state", "object required");
  reject_unknown_keys(doc, {"working_dir", "open_file", "recent_edits", "external_edits"}, "state");
  StateSummary s;
  try {
    s.working_dir = doc.at("working_dir").get<std::string>();
    s.open_file = doc.at("open_file").get<std::string>();
    s.recent_edits = doc.at("recent_edits").get<std::vector<std::string>>();
    if (doc.contains("external_edits")) s.external_edits = doc["external_edits"].get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw SchemaError("state", e.what());
  }
  return s;
}

std::vector<EditRecord> fold_ledger(const std::vector<Step>& prefix) {
  std::vector<EditRecord> out;
  std::set<std::string> seen;
  for (const auto& step : prefix) {
    const auto& e = step.observation.edit;
    if (!e) continue;
    const std::string key = e->file + ":" + std::to_string(e->line_start) + ":" + std::to_string(e->line_end);
    if (seen.insert(key).second) out.push_back({e->file, e->line_start, e->line_end, step.action.index});
  }
  return out;
}

std::string render_edit(const EditRecord& r) {
  return "Edited " + r.file + " at lines " + std::to_string(r.line_start) + ":" + std::to_string(r.line_end);
}

std::string render_external(const ExternalEdit& e) {
  return "Since your previous action, another user edited " + e.file + " at lines " + std::to_string(e.line_start) +
         ":" + std::to_string(e.line_end);
}

StateSummary ledger_update(const std::vector<Step>& prefix, const StateSummary& previous,
                           const std::vector<ExternalEdit>& events) {
  return LedgerPolicy().update(prefix, {previous}, events);
}

StateSummary LedgerPolicy::update(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior,
                                  const std::vector<ExternalEdit>& events) const {
  StateSummary s = prompt_state(prefix, prior);
  for (const auto& r : fold_ledger(prefix)) s.recent_edits.push_back(render_edit(r));
  for (const auto& e : events) s.external_edits.push_back(render_external(e));
  return s;
}

std::string render_state_block(const StateSummary& s) {
  std::string out;
  if (!s.external_edits.empty()) out += "(External Edits: " + py_list_repr(s.external_edits) + ")\n";
  out += "(Current State: " + py_list_repr(s.recent_edits) + ")\n";
  out += "(Open file: " + s.open_file + ")\n";
  out += "(Current directory: " + s.working_dir + ")\n";
  return out + "bash-$";
}

std::string LedgerPolicy::render(const StateSummary& state) const { return render_state_block(state); }

StateSummary NullPolicy::update(const std::vector<Step>& prefix, const std::vector<StateSummary>& prior,
                                const std::vector<ExternalEdit>&) const {
  return prompt_state(prefix, prior);
}

std::string NullPolicy::render(const StateSummary& s) const {
  return "(Open file: " + s.open_file + ")\n(Current directory: " + s.working_dir + ")\nbash-$";
}

std::unique_ptr<StatePolicy> make_policy(const std::string& name) {
  if (name == "ledger") return std::make_unique<LedgerPolicy>();
  if (name == "none") return std::make_unique<NullPolicy>();
  throw SchemaError("policy", "expected ledger or none, got '" + name + "'");
}

}  // namespace refactorkit::harness
