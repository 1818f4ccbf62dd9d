#include "evident/evidence.hpp"

#include <algorithm>
#include <set>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

namespace {

const char* kRules =
    "You are repairing a failed package build. Work only from the evidence\n"
    "below. Evidence slots are authoritative: FEEDBACK reflects the most\n"
    "recent build only, HISTORY lists every prior edit (failed edits are\n"
    "binding do-not-repeat constraints), FINDINGS are fresh tool outputs\n"
    "for this iteration, KNOWLEDGE is optional background. Never repeat an\n"
    "edit listed as confirmed failed.";

const char* kWorkflow =
    "Workflow: (1) analyze the failure with the analysis tools, (2) apply\n"
    "targeted artifact modifications, (3) finish the iteration with exactly\n"
    "one submit_build call. Every iteration must end in a build submission.";

std::string truncate_to(std::string text, size_t budget) {
  if (text.size() <= budget) return text;
  text.resize(budget);
  text += "\n[truncated]";
  return text;
}

}  // namespace

std::string PromptDocument::render() const {
  std::string out;
  out += rules_section;
  out += "\n\n## FEEDBACK\n";
  out += slot_feedback;
  out += "\n\n## HISTORY\n";
  out += slot_history;
  out += "\n\n## FINDINGS\n";
  out += slot_findings;
  out += "\n\n## KNOWLEDGE\n";
  out += slot_knowledge;
  out += "\n\n";
  out += workflow_section;
  out += "\n";
  return out;
}

json feedback_to_json(const BuildFeedback& fb) {
  json j;
  j["iteration"] = fb.iteration;
  j["status"] = to_string(fb.status);
  j["log_ref"] = fb.log_ref;
  j["signals"] = json::array();
  for (const auto& s : fb.signals) j["signals"].push_back(signal_to_json(s));
  j["complete"] = fb.complete;
  return j;
}

BuildFeedback feedback_from_json(const json& j) {
  BuildFeedback fb;
  fb.iteration = j.value("iteration", 0);
  fb.status = status_from_string(j.value("status", "failed"));
  fb.log_ref = j.value("log_ref", "");
  for (const auto& s : j.value("signals", json::array()))
    fb.signals.push_back(signal_from_json(s));
  fb.complete = j.value("complete", true);
  return fb;
}

json history_entry_to_json(const HistoryEntry& e) {
  return json{{"iteration", e.iteration},
              {"sequence", e.sequence},
              {"action_kind", to_string(e.action_kind)},
              {"target_path", e.target_path},
              {"diff_summary", e.diff_summary},
              {"validated", to_string(e.validated)}};
}

HistoryEntry history_entry_from_json(const json& j) {
  HistoryEntry e;
  e.iteration = j.value("iteration", 0);
  e.sequence = j.value("sequence", 0);
  e.action_kind = repair_kind_from_string(j.value("action_kind", "config_adaptation"));
  e.target_path = j.value("target_path", "");
  e.diff_summary = j.value("diff_summary", "");
  e.validated = validation_from_string(j.value("validated", "pending"));
  return e;
}

EvidenceContext::EvidenceContext(std::string package_id, int budget)
    : package_id_(std::move(package_id)), budget_(budget) {
  if (budget < 1) raise(ErrorCode::precondition, "budget must be >= 1");
}

void EvidenceContext::set_knowledge(std::vector<KnowledgeEntry> entries) {
  knowledge_ = std::move(entries);
}

void EvidenceContext::drop_stale_findings() {
  for (auto it = findings_.begin(); it != findings_.end();)
    it = it->second.iteration == iteration_ ? std::next(it) : findings_.erase(it);
}

void EvidenceContext::record_feedback(BuildFeedback fb) {
  if (fb.iteration != iteration_)
    raise(ErrorCode::boundary_violation,
          "feedback iteration " + std::to_string(fb.iteration) +
              " does not match context iteration " + std::to_string(iteration_));
  if (fb.status == BuildStatus::succeeded && !fb.signals.empty())
    raise(ErrorCode::precondition, "succeeded feedback must carry no signals");
  if (fb.status == BuildStatus::timeout && fb.complete)
    raise(ErrorCode::precondition, "timeout feedback must be partial (complete=false)");
  feedback_ = std::move(fb);
  drop_stale_findings();
}

int EvidenceContext::next_sequence() const {
  int next = 0;
  for (const auto& e : history_)
    if (e.iteration == iteration_ && e.sequence >= next) next = e.sequence + 1;
  return next;
}

void EvidenceContext::append_history(HistoryEntry entry) {
  if (entry.iteration != iteration_)
    raise(ErrorCode::boundary_violation,
          "history entry iteration " + std::to_string(entry.iteration) +
              " does not match context iteration " + std::to_string(iteration_));
  for (const auto& e : history_)
    if (e.iteration == entry.iteration && e.sequence == entry.sequence)
      raise(ErrorCode::duplicate_entry,
            "duplicate history entry (" + std::to_string(entry.iteration) + ", " +
                std::to_string(entry.sequence) + ")");
  if (entry.sequence != next_sequence())
    raise(ErrorCode::precondition,
          "history sequence must be " + std::to_string(next_sequence()) + ", got " +
              std::to_string(entry.sequence));
  history_.push_back(std::move(entry));
}

int EvidenceContext::mark_validated(int iteration, ValidationResult result) {
  if (result == ValidationResult::pending)
    raise(ErrorCode::precondition, "cannot mark entries back to pending");
  int marked = 0;
  for (auto& e : history_) {
    if (e.iteration == iteration && e.validated == ValidationResult::pending) {
      e.validated = result;
      ++marked;
    }
  }
  if (marked == 0)
    warnings_.push_back("mark_validated: no pending entries at iteration " +
                        std::to_string(iteration));
  return marked;
}

void EvidenceContext::cache_finding(const std::string& key, json payload) {
  CachedFinding f;
  f.key = key;
  f.iteration = iteration_;
  f.stable_id = sha256_hex(payload.dump());
  f.payload = std::move(payload);
  findings_[key] = std::move(f);
}

void EvidenceContext::note_build_terminal() { build_terminal_ = true; }

void EvidenceContext::abort_iteration(const std::string& reason) {
  warnings_.push_back("iteration " + std::to_string(iteration_) + " aborted: " + reason);
  build_terminal_ = true;
}

void EvidenceContext::advance_iteration() {
  if (!build_terminal_)
    raise(ErrorCode::precondition,
          "cannot advance: iteration " + std::to_string(iteration_) +
              " has no terminal build");
  if (iteration_ + 1 >= budget_)
    raise(ErrorCode::budget_exhausted,
          "budget of " + std::to_string(budget_) + " iterations is exhausted");
  ++iteration_;
  build_terminal_ = false;
  findings_.clear();
}

PromptDocument EvidenceContext::fuse(const SlotBudgets& budgets) const {
  PromptDocument doc;
  doc.rules_section = kRules;
  doc.workflow_section = kWorkflow;

  // FEEDBACK: current iteration's build evidence only
  if (!feedback_) {
    doc.slot_feedback = "(none)";
  } else {
    std::string s;
    s += "build status: ";
    s += to_string(feedback_->status);
    s += feedback_->complete ? " (complete)" : " (partial: no full log within the window)";
    s += "\nlog: ";
    s += feedback_->log_ref.empty() ? "(none)" : feedback_->log_ref;
    if (feedback_->signals.empty()) {
      s += "\nsignals: (none)";
    } else {
      s += "\nsignals:";
      for (const auto& sig : feedback_->signals) {
        s += "\n- [";
        s += to_string(sig.stage);
        s += "] ";
        s += sig.template_text;
        if (!sig.keywords.empty()) {
          s += "\n  keywords: ";
          for (size_t i = 0; i < sig.keywords.size(); ++i) {
            if (i) s += ", ";
            s += sig.keywords[i];
          }
        }
        for (const auto& line : sig.window) {
          s += "\n  | ";
          s += line;
        }
      }
    }
    doc.slot_feedback = truncate_to(std::move(s), budgets.feedback);
  }

  // HISTORY: do-not-repeat rules first so truncation can never drop them
  if (history_.empty()) {
    doc.slot_history = "(no prior edits)";
  } else {
    std::string s;
    std::vector<std::pair<std::string, RepairKind>> rules;
    for (const auto& e : history_) {
      if (e.validated != ValidationResult::confirmed_failed) continue;
      std::pair<std::string, RepairKind> key{e.target_path, e.action_kind};
      if (std::find(rules.begin(), rules.end(), key) == rules.end()) rules.push_back(key);
    }
    if (!rules.empty()) {
      s += "do not repeat (confirmed failed):";
      for (const auto& [path, kind] : rules) {
        s += "\n- ";
        s += to_string(kind);
        s += " on ";
        s += path;
      }
      s += "\n";
    }
    s += "edits:";
    for (const auto& e : history_) {
      s += "\n- iter ";
      s += std::to_string(e.iteration);
      s += " seq ";
      s += std::to_string(e.sequence);
      s += ": ";
      s += to_string(e.action_kind);
      s += " ";
      s += e.target_path;
      s += " [";
      s += to_string(e.validated);
      s += "]";
      if (!e.diff_summary.empty()) {
        for (const auto& line : split_lines(e.diff_summary)) {
          s += "\n    ";
          s += line;
        }
      }
    }
    doc.slot_history = truncate_to(std::move(s), budgets.history);
  }

  // FINDINGS: fresh (current-iteration) tool outputs with stable ids
  if (findings_.empty()) {
    doc.slot_findings = "(none)";
  } else {
    std::string s;
    bool first = true;
    for (const auto& [key, f] : findings_) {
      if (!first) s += "\n";
      first = false;
      s += "- ";
      s += key;
      s += " [id:";
      s += f.stable_id.substr(0, 12);
      s += "]: ";
      s += f.payload.dump();
    }
    doc.slot_findings = truncate_to(std::move(s), budgets.findings);
  }

  // KNOWLEDGE: only entries that passed the relevance threshold upstream
  if (knowledge_.empty()) {
    doc.slot_knowledge = "(none)";
  } else {
    std::string s;
    for (size_t i = 0; i < knowledge_.size(); ++i) {
      if (i) s += "\n";
      s += "- [";
      s += knowledge_[i].id;
      s += "] (";
      s += knowledge_[i].isa;
      s += ") ";
      s += knowledge_[i].text;
    }
    doc.slot_knowledge = truncate_to(std::move(s), budgets.knowledge);
  }

  return doc;
}

json EvidenceContext::to_json() const {
  json j;
  j["format"] = "context.v1";
  j["package_id"] = package_id_;
  j["iteration"] = iteration_;
  j["budget"] = budget_;
  j["build_terminal"] = build_terminal_;
  j["feedback"] = feedback_ ? feedback_to_json(*feedback_) : json(nullptr);
  j["history"] = json::array();
  for (const auto& e : history_) j["history"].push_back(history_entry_to_json(e));
  j["findings"] = json::object();
  for (const auto& [key, f] : findings_)
    j["findings"][key] = json{{"key", f.key},
                              {"iteration", f.iteration},
                              {"payload", f.payload},
                              {"stable_id", f.stable_id}};
  j["knowledge"] = json::array();
  for (const auto& e : knowledge_)
    j["knowledge"].push_back(json{{"id", e.id},
                                  {"isa", e.isa},
                                  {"text", e.text},
                                  {"tags", e.tags},
                                  {"source", e.source}});
  return j;
}

EvidenceContext EvidenceContext::from_json(const json& j) {
  if (j.value("format", "") != "context.v1")
    raise(ErrorCode::config_error, "expected context.v1 document");
  EvidenceContext ctx(j.value("package_id", ""), j.value("budget", 3));
  ctx.iteration_ = j.value("iteration", 0);
  ctx.build_terminal_ = j.value("build_terminal", false);
  if (j.contains("feedback") && !j["feedback"].is_null())
    ctx.feedback_ = feedback_from_json(j["feedback"]);
  for (const auto& e : j.value("history", json::array()))
    ctx.history_.push_back(history_entry_from_json(e));
  // materialize before .items(): the proxy must not outlive the container
  const json findings = j.value("findings", json::object());
  for (const auto& [key, f] : findings.items()) {
    CachedFinding finding;
    finding.key = f.value("key", key);
    finding.iteration = f.value("iteration", 0);
    finding.payload = f.value("payload", json());
    finding.stable_id = f.value("stable_id", "");
    ctx.findings_[key] = std::move(finding);
  }
  for (const auto& e : j.value("knowledge", json::array())) {
    KnowledgeEntry entry;
    entry.id = e.value("id", "");
    entry.isa = e.value("isa", "any");
    entry.text = e.value("text", "");
    entry.tags = e.value("tags", std::vector<std::string>{});
    entry.source = e.value("source", "");
    ctx.knowledge_.push_back(std::move(entry));
  }
  return ctx;
}

}  // namespace evident
