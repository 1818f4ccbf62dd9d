#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evident/agent_driver.hpp"
#include "evident/build_service.hpp"
#include "evident/evidence.hpp"
#include "evident/types.hpp"

namespace evident {

struct SessionConfig {
  std::string package_id;
  int budget = 3;           // max repair iterations
  double window_s = 600.0;  // build monitoring window
  std::string isa = "riscv64";
  std::string keyword_config;    // optional keyword file
  std::string corpus_path;       // optional knowledge.v1 corpus
  std::string prune_rules_path;  // optional prune-rule file
  int tool_call_cap = 20;        // per-iteration bound on agent turns
  int knowledge_top_k = 5;
  double knowledge_threshold = 0.15;
};

struct IterationRecord {
  int iteration = 0;
  std::vector<AgentTurn> turns;
  WorkflowVerdict verdict = WorkflowVerdict::early_termination;
  std::optional<BuildOutcome> outcome;
  std::vector<HistoryEntry> entries;
  std::string diagnostics;
};

struct SessionReport {
  std::string package_id;
  SessionOutcome outcome = SessionOutcome::failed;
  int iterations_used = 0;
  std::vector<IterationRecord> iterations;
  std::optional<FailureCategory> failure_category;
  double time_repair_s = 0.0;  // wall clock excluding builds
  double time_build_s = 0.0;   // cumulative build-side duration
  std::string diagnostics;
};

// Boots evidence from the initial failure log, then loops analysis →
// repair → mandatory build validation until success, budget exhaustion,
// or a broken/unsolvable condition. Nothing escapes as an exception
// except configuration errors raised before the session starts.
SessionReport run_session(const SessionConfig& config, const std::string& workspace,
                          const std::string& initial_log_path, AgentDriver& driver,
                          BuildService& service);

SessionOutcome classify_outcome(BuildStatus last_status, bool broken_input);

json report_to_json(const SessionReport& report);  // report.v1 (kind: session)
SessionReport report_from_json(const json& j);

struct BatchSummary {
  int total = 0;
  int success = 0;
  int failed = 0;
  int broken = 0;
  std::string success_rate;  // percentage with 2 decimals; empty for an empty batch
  double mean_time_repair_s = 0.0;
  double mean_time_build_s = 0.0;
  int misordered = 0;
  int early_termination = 0;
};

// How to run one session end-to-end from files; shared by the CLI, the C
// API, and batch mode.
struct RunSpec {
  SessionConfig config;
  std::string workspace;
  std::string initial_log;
  std::string driver_spec = "scripted:";  // "scripted:<script.json>" | "remote"
  std::string service_spec = "sim:";      // "sim:<session.json>" | "real"
  RemoteServiceConfig remote;
  std::string model;
  double temperature = 1.0;
  double poll_interval_s = 0.05;
};

RunSpec run_spec_from_json(const json& j);
SessionReport run_from_spec(const RunSpec& spec);

struct BatchResult {
  BatchSummary summary;
  std::vector<SessionReport> reports;
};

// batch.v1 manifest: defaults + per-package overrides. Individual session
// crashes become Failed reports; the batch never aborts.
BatchResult run_batch(const std::vector<RunSpec>& specs);
std::vector<RunSpec> load_batch_manifest(const std::string& manifest_path);

json batch_to_json(const BatchResult& result);  // report.v1 (kind: batch)

}  // namespace evident
