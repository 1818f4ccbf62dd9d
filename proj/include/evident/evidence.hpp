#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evident/knowledge_base.hpp"
#include "evident/types.hpp"

namespace evident {

// What the most recent build said. At most one of these is ever live in a
// context; recording a new one discards the old.
struct BuildFeedback {
  int iteration = 0;
  BuildStatus status = BuildStatus::failed;
  std::string log_ref;
  std::vector<FailureSignal> signals;
  bool complete = true;  // false for timeout-derived partial feedback

  bool operator==(const BuildFeedback&) const = default;
};

// One applied repair action. Entries are append-only and survive the whole
// session, including failed ones (negative evidence).
struct HistoryEntry {
  int iteration = 0;
  int sequence = 0;
  RepairKind action_kind = RepairKind::config_adaptation;
  std::string target_path;
  std::string diff_summary;  // unified diff, truncated at 200 lines
  ValidationResult validated = ValidationResult::pending;

  bool operator==(const HistoryEntry&) const = default;
};

// Output of a deterministic analysis tool, valid for one iteration.
struct CachedFinding {
  std::string key;
  int iteration = 0;
  json payload;
  std::string stable_id;  // content hash of the payload

  bool operator==(const CachedFinding&) const = default;
};

// The four evidence slots in fixed order plus framing text. Rendering an
// unchanged context twice yields byte-identical output.
struct PromptDocument {
  std::string rules_section;
  std::string slot_feedback;
  std::string slot_history;
  std::string slot_findings;
  std::string slot_knowledge;
  std::string workflow_section;

  std::string render() const;

  bool operator==(const PromptDocument&) const = default;
};

struct SlotBudgets {
  size_t feedback = 8000;
  size_t history = 4000;
  size_t findings = 6000;
  size_t knowledge = 4000;
};

json feedback_to_json(const BuildFeedback& fb);
BuildFeedback feedback_from_json(const json& j);
json history_entry_to_json(const HistoryEntry& e);
HistoryEntry history_entry_from_json(const json& j);

class EvidenceContext {
 public:
  EvidenceContext() = default;
  EvidenceContext(std::string package_id, int budget = 3);

  const std::string& package_id() const { return package_id_; }
  int iteration() const { return iteration_; }
  int budget() const { return budget_; }
  bool build_terminal() const { return build_terminal_; }
  const std::optional<BuildFeedback>& feedback() const { return feedback_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  const std::map<std::string, CachedFinding>& findings() const { return findings_; }
  const std::vector<KnowledgeEntry>& knowledge() const { return knowledge_; }

  // Retrieved entries are relevance-ordered by the caller.
  void set_knowledge(std::vector<KnowledgeEntry> entries);

  // fb.iteration must equal the current iteration (boundary_violation
  // otherwise); succeeded feedback must carry no signals and timeout
  // feedback must be partial.
  void record_feedback(BuildFeedback fb);

  int next_sequence() const;
  void append_history(HistoryEntry entry);

  // Marks all pending entries of one iteration; returns how many were
  // marked (0 = no-op, surfaced as a warning by callers).
  int mark_validated(int iteration, ValidationResult result);

  void cache_finding(const std::string& key, json payload);

  // The current iteration's build reached a terminal state; prerequisite
  // for advance_iteration.
  void note_build_terminal();
  // Crash containment: abandon the iteration as failed so the session can
  // move on without a terminal build.
  void abort_iteration(const std::string& reason);

  // Increments the iteration, clears findings, keeps history and feedback.
  // Raises budget_exhausted when the budget is spent and precondition when
  // the current build is not terminal.
  void advance_iteration();

  PromptDocument fuse(const SlotBudgets& budgets = {}) const;

  json to_json() const;  // context.v1
  static EvidenceContext from_json(const json& j);

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::string package_id_;
  int iteration_ = 0;
  int budget_ = 3;
  bool build_terminal_ = false;
  std::optional<BuildFeedback> feedback_;
  std::vector<HistoryEntry> history_;
  std::map<std::string, CachedFinding> findings_;
  std::vector<KnowledgeEntry> knowledge_;
  std::vector<std::string> warnings_;

  void drop_stale_findings();
};

}  // namespace evident
