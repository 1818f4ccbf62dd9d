#include "evident/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>

#include "evident/archive.hpp"
#include "evident/errors.hpp"
#include "evident/knowledge_base.hpp"
#include "evident/log_distiller.hpp"
#include "evident/recipe_analyzer.hpp"
#include "evident/repair_engine.hpp"
#include "evident/util.hpp"
#include "evident/workspace_inspector.hpp"

namespace fs = std::filesystem;

namespace evident {

namespace {

std::string find_recipe(const std::string& workspace) {
  std::error_code ec;
  std::vector<std::string> specs;
  for (const auto& entry : fs::directory_iterator(workspace, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".spec")
      specs.push_back(entry.path().filename().string());
  }
  std::sort(specs.begin(), specs.end());
  return specs.empty() ? "" : specs.front();
}

std::vector<PayloadFile> collect_payload(const std::string& workspace) {
  std::vector<PayloadFile> payload;
  fs::path root(workspace);
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    std::string rel = fs::relative(it->path(), root).generic_string();
    // session-internal state (scratch, history, logs) never leaves the machine
    if (!rel.empty() && rel[0] == '.') {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) payload.push_back({rel, read_file_bytes(it->path().string())});
  }
  std::sort(payload.begin(), payload.end(),
            [](const PayloadFile& a, const PayloadFile& b) { return a.path < b.path; });
  return payload;
}

// Per-session mutable tool state shared by the dispatch loop.
struct SessionState {
  std::string workspace;
  SessionConfig config;
  RepairEngine engine;
  EvidenceContext ctx;
  std::map<std::string, std::unique_ptr<ArchiveHandle>> archives;
  std::string recipe_name;
  std::string last_log_text;
  std::vector<std::string> keywords;
  std::vector<std::string> prune_rules;
};

json dispatch_tool(SessionState& st, const AgentTurn& turn) {
  const json& args = turn.arguments;

  if (turn.tool == "distill_log") {
    DistillOptions opts;
    opts.keywords = st.keywords;
    if (args.contains("window")) opts.window = args["window"].get<int>();
    auto signals = distill(st.last_log_text, opts);
    return signals_to_document(signals);
  }
  if (turn.tool == "parse_recipe") {
    std::string path = args.value("path", st.recipe_name);
    auto rc = parse_recipe(st.engine.read_file(path));
    json doc = recipe_to_json(rc);
    st.ctx.cache_finding("recipe_constraints", doc);
    return doc;
  }
  if (turn.tool == "inventory") {
    auto inv = inventory(st.workspace, st.prune_rules);
    json doc = inventory_to_json(inv);
    st.ctx.cache_finding("structure_inventory", doc);
    return doc;
  }
  if (turn.tool == "read_file") {
    std::string path = args.at("path").get<std::string>();
    return json{{"path", path}, {"content", st.engine.read_file(path)}};
  }
  if (turn.tool == "unpack") {
    std::string path = args.at("path").get<std::string>();
    auto handle = std::make_unique<ArchiveHandle>(
        ArchiveHandle::unpack((fs::path(st.workspace) / path).string(), st.workspace));
    json manifest = json::array();
    for (const auto& m : handle->manifest())
      manifest.push_back({{"path", m.path}, {"sha256", m.sha256}, {"mode", m.mode}});
    json doc{{"archive", path},
             {"format", archive_format_name(handle->format())},
             {"scratch", handle->scratch_dir()},
             {"members", manifest}};
    st.engine.attach_archive(handle.get());
    st.archives[path] = std::move(handle);
    return doc;
  }
  if (turn.tool == "edit_member") {
    std::string archive = args.at("archive").get<std::string>();
    auto it = st.archives.find(archive);
    if (it == st.archives.end())
      raise(ErrorCode::precondition, "archive not unpacked: " + archive);
    it->second->edit_member(args.at("member").get<std::string>(),
                            args.at("content").get<std::string>(), args.value("create", false));
    return json{{"archive", archive}, {"member", args.at("member")}, {"dirty", true}};
  }
  if (turn.tool == "repack") {
    std::string archive = args.at("archive").get<std::string>();
    if (!st.archives.count(archive))
      raise(ErrorCode::precondition, "archive not unpacked: " + archive);
    RepairAction action;
    action.kind = RepairKind::archive_repackage;
    action.target_path = archive;
    HistoryEntry e = st.engine.apply(action, st.ctx.iteration(), st.ctx.next_sequence());
    st.ctx.append_history(e);
    return history_entry_to_json(e);
  }
  if (turn.tool == "apply_config" || turn.tool == "apply_source") {
    RepairAction action;
    action.kind = turn.tool == "apply_config" ? RepairKind::config_adaptation
                                              : RepairKind::source_modification;
    action.target_path = args.at("path").get<std::string>();
    action.new_content = args.value("content", "");
    action.rationale = turn.note;
    action.create = args.value("create", false);
    action.tombstone = args.value("tombstone", false);
    HistoryEntry e = st.engine.apply(action, st.ctx.iteration(), st.ctx.next_sequence());
    st.ctx.append_history(e);
    return history_entry_to_json(e);
  }
  raise(ErrorCode::precondition, "unknown tool: " + turn.tool);
}

bool is_broken_input_error(const Error& e) {
  return e.code() == ErrorCode::broken_recipe || e.code() == ErrorCode::broken_archive;
}

}  // namespace

SessionOutcome classify_outcome(BuildStatus last_status, bool broken_input) {
  if (broken_input || last_status == BuildStatus::unresolvable)
    return SessionOutcome::broken_unsolvable;
  if (last_status == BuildStatus::succeeded) return SessionOutcome::success;
  return SessionOutcome::failed;
}

SessionReport run_session(const SessionConfig& config, const std::string& workspace,
                          const std::string& initial_log_path, AgentDriver& driver,
                          BuildService& service) {
  const auto session_start = std::chrono::steady_clock::now();
  SessionReport report;
  report.package_id = config.package_id;

  auto finish = [&](SessionOutcome outcome) -> SessionReport& {
    report.outcome = outcome;
    double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - session_start).count();
    report.time_repair_s = std::max(0.0, total - report.time_build_s);
    return report;
  };

  std::error_code ec;
  if (!fs::is_directory(workspace, ec) || ec) {
    report.diagnostics = "workspace does not exist: " + workspace;
    return finish(SessionOutcome::broken_unsolvable);
  }
  std::string recipe_name = find_recipe(workspace);
  if (recipe_name.empty()) {
    report.diagnostics = "workspace has no build recipe (*.spec)";
    return finish(SessionOutcome::broken_unsolvable);
  }

  // configuration problems surface before the session starts
  std::string initial_log = read_file_bytes(initial_log_path);

  SessionState st{workspace, config, RepairEngine(workspace),
                  EvidenceContext(config.package_id, config.budget)};
  st.recipe_name = recipe_name;
  st.last_log_text = initial_log;
  st.keywords =
      config.keyword_config.empty() ? default_keywords() : load_keywords(config.keyword_config);
  st.prune_rules = config.prune_rules_path.empty() ? default_prune_rules()
                                                   : load_prune_rules(config.prune_rules_path);

  try {
    parse_recipe(read_file_bytes((fs::path(workspace) / recipe_name).string()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::broken_recipe) {
      report.diagnostics = std::string("broken recipe: ") + e.what();
      return finish(SessionOutcome::broken_unsolvable);
    }
    report.diagnostics = std::string("recipe warning: ") + e.what();
  }

  TfIdfIndex knowledge_index;
  if (!config.corpus_path.empty())
    knowledge_index = TfIdfIndex::build(load_knowledge(config.corpus_path), config.isa);

  {
    DistillOptions opts;
    opts.keywords = st.keywords;
    BuildFeedback bootstrap;
    bootstrap.iteration = 0;
    bootstrap.status = BuildStatus::failed;
    bootstrap.log_ref = initial_log_path;
    bootstrap.signals = distill(initial_log, opts);
    bootstrap.complete = true;
    st.ctx.record_feedback(bootstrap);
  }

  const std::string log_dir = (fs::path(workspace) / ".evident-logs").string();
  ToolRegistry registry = default_registry();
  bool broken_input = false;
  BuildStatus last_status = BuildStatus::failed;

  for (int k = 0; k < config.budget; ++k) {
    IterationRecord record;
    record.iteration = k;
    report.iterations_used = k + 1;
    bool submitted = false;

    try {
      if (knowledge_index.size() > 0 && st.ctx.feedback()) {
        std::vector<KnowledgeEntry> retrieved;
        for (const auto& hit : knowledge_index.query(st.ctx.feedback()->signals, config.isa,
                                                     config.knowledge_top_k,
                                                     config.knowledge_threshold))
          if (const KnowledgeEntry* entry = knowledge_index.entry(hit.id))
            retrieved.push_back(*entry);
        st.ctx.set_knowledge(std::move(retrieved));
      }

      std::vector<json> observations;
      observations.push_back(
          {{"build_status", st.ctx.feedback() ? to_string(st.ctx.feedback()->status) : ""}});

      for (int calls = 0; calls < config.tool_call_cap; ++calls) {
        PromptDocument prompt = st.ctx.fuse();
        AgentTurn turn = driver.next_turn(prompt, observations);
        if (turn.kind == AgentTurn::Kind::final_turn) break;
        registry.validate_arguments(turn.tool, turn.arguments);
        record.turns.push_back(turn);
        if (turn.tool == "submit_build") break;
        json result = dispatch_tool(st, turn);
        observations.push_back(result);
      }

      record.verdict = enforce_workflow(record.turns);

      if (!record.turns.empty() && record.turns.back().tool == "submit_build") {
        for (const auto& [path, handle] : st.archives) {
          if (handle->dirty()) handle->repack();  // dirty edits must ship
        }
        BuildSubmission submission;
        submission.package_id = config.package_id;
        submission.iteration = k;
        submission.payload = collect_payload(workspace);
        submission.submitted_at = iso8601_now();

        DistillOptions opts;
        opts.keywords = st.keywords;
        BuildOutcome outcome;
        BuildFeedback feedback =
            service.validate(submission, config.window_s, opts, log_dir, &outcome);
        submitted = true;
        record.outcome = outcome;
        report.time_build_s += outcome.elapsed_s;
        last_status = feedback.status;
        if (!feedback.log_ref.empty()) {
          try {
            st.last_log_text = read_file_bytes(feedback.log_ref);
          } catch (const Error&) {
          }
        }

        st.ctx.note_build_terminal();
        if (feedback.status == BuildStatus::succeeded) {
          st.ctx.mark_validated(k, ValidationResult::confirmed_succeeded);
          for (const auto& e : st.ctx.history())
            if (e.iteration == k) record.entries.push_back(e);
          report.iterations.push_back(std::move(record));
          return finish(SessionOutcome::success);
        }
        // A timeout proves nothing about the edits; only a real failure
        // turns them into do-not-repeat evidence.
        if (feedback.status != BuildStatus::timeout)
          st.ctx.mark_validated(k, ValidationResult::confirmed_failed);
        if (feedback.status == BuildStatus::unresolvable) {
          for (const auto& e : st.ctx.history())
            if (e.iteration == k) record.entries.push_back(e);
          report.iterations.push_back(std::move(record));
          report.diagnostics = "service reported the package unresolvable";
          return finish(SessionOutcome::broken_unsolvable);
        }
        if (k + 1 < config.budget) {
          st.ctx.advance_iteration();
          feedback.iteration = st.ctx.iteration();
          st.ctx.record_feedback(feedback);
        }
      } else {
        record.diagnostics = "iteration ended without a build submission";
        st.ctx.abort_iteration(record.diagnostics);
        if (k + 1 < config.budget) {
          st.ctx.advance_iteration();
          if (st.ctx.feedback()) {
            BuildFeedback carry = *st.ctx.feedback();
            carry.iteration = st.ctx.iteration();
            st.ctx.record_feedback(carry);
          }
        }
      }
    } catch (const Error& e) {
      record.diagnostics = std::string(error_code_name(e.code())) + ": " + e.what();
      if (is_broken_input_error(e)) {
        for (const auto& entry : st.ctx.history())
          if (entry.iteration == k) record.entries.push_back(entry);
        report.diagnostics = record.diagnostics;
        report.iterations.push_back(std::move(record));
        return finish(SessionOutcome::broken_unsolvable);
      }
      if (!submitted) {
        st.ctx.abort_iteration(record.diagnostics);
        if (k + 1 < config.budget) {
          st.ctx.advance_iteration();
          if (st.ctx.feedback()) {
            BuildFeedback carry = *st.ctx.feedback();
            carry.iteration = st.ctx.iteration();
            st.ctx.record_feedback(carry);
          }
        }
      }
    } catch (const std::exception& e) {
      record.diagnostics = std::string("unhandled: ") + e.what();
      if (!submitted) {
        st.ctx.abort_iteration(record.diagnostics);
        if (k + 1 < config.budget) {
          st.ctx.advance_iteration();
          if (st.ctx.feedback()) {
            BuildFeedback carry = *st.ctx.feedback();
            carry.iteration = st.ctx.iteration();
            st.ctx.record_feedback(carry);
          }
        }
      }
    }

    for (const auto& e : st.ctx.history())
      if (e.iteration == k) record.entries.push_back(e);
    report.iterations.push_back(std::move(record));
  }

  if (st.ctx.feedback() && !st.ctx.feedback()->signals.empty())
    report.failure_category = classify(st.ctx.feedback()->signals);
  return finish(classify_outcome(last_status, broken_input));
}

// -------------------------------------------------------------- reporting

namespace {

json iteration_to_json(const IterationRecord& r) {
  json j;
  j["iteration"] = r.iteration;
  j["turns"] = json::array();
  for (const auto& t : r.turns) j["turns"].push_back(turn_to_json(t));
  j["verdict"] = to_string(r.verdict);
  if (r.outcome) {
    j["outcome"] = {{"status", to_string(r.outcome->status)},
                    {"last_observed_state", r.outcome->last_observed_state},
                    {"elapsed_s", r.outcome->elapsed_s}};
    if (r.outcome->log_ref) j["outcome"]["log_ref"] = *r.outcome->log_ref;
  } else {
    j["outcome"] = nullptr;
  }
  j["entries"] = json::array();
  for (const auto& e : r.entries) j["entries"].push_back(history_entry_to_json(e));
  j["diagnostics"] = r.diagnostics;
  return j;
}

IterationRecord iteration_from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.value("iteration", 0);
  for (const auto& t : j.value("turns", json::array())) r.turns.push_back(turn_from_json(t));
  r.verdict = verdict_from_string(j.value("verdict", "early_termination"));
  if (j.contains("outcome") && !j["outcome"].is_null()) {
    BuildOutcome o;
    o.status = status_from_string(j["outcome"].value("status", "failed"));
    o.last_observed_state = j["outcome"].value("last_observed_state", "");
    o.elapsed_s = j["outcome"].value("elapsed_s", 0.0);
    if (j["outcome"].contains("log_ref")) o.log_ref = j["outcome"]["log_ref"].get<std::string>();
    r.outcome = o;
  }
  for (const auto& e : j.value("entries", json::array()))
    r.entries.push_back(history_entry_from_json(e));
  r.diagnostics = j.value("diagnostics", "");
  return r;
}

}  // namespace

json report_to_json(const SessionReport& report) {
  json j;
  j["format"] = "report.v1";
  j["kind"] = "session";
  j["package_id"] = report.package_id;
  j["outcome"] = to_string(report.outcome);
  j["iterations_used"] = report.iterations_used;
  j["iterations"] = json::array();
  for (const auto& r : report.iterations) j["iterations"].push_back(iteration_to_json(r));
  if (report.failure_category)
    j["failure_category"] = {{"category", to_string(report.failure_category->category)},
                             {"subcategory", report.failure_category->subcategory}};
  else
    j["failure_category"] = nullptr;
  j["time_repair_s"] = report.time_repair_s;
  j["time_build_s"] = report.time_build_s;
  j["diagnostics"] = report.diagnostics;
  return j;
}

SessionReport report_from_json(const json& j) {
  if (j.value("format", "") != "report.v1")
    raise(ErrorCode::config_error, "expected report.v1 document");
  SessionReport report;
  report.package_id = j.value("package_id", "");
  report.outcome = outcome_from_string(j.value("outcome", "Failed"));
  report.iterations_used = j.value("iterations_used", 0);
  for (const auto& r : j.value("iterations", json::array()))
    report.iterations.push_back(iteration_from_json(r));
  if (j.contains("failure_category") && !j["failure_category"].is_null())
    report.failure_category =
        FailureCategory{failure_category_from_string(j["failure_category"].value("category", "")),
                        j["failure_category"].value("subcategory", "")};
  report.time_repair_s = j.value("time_repair_s", 0.0);
  report.time_build_s = j.value("time_build_s", 0.0);
  report.diagnostics = j.value("diagnostics", "");
  return report;
}

// ------------------------------------------------------------------ batch

RunSpec run_spec_from_json(const json& j) {
  RunSpec spec;
  spec.config.package_id = j.value("package_id", "");
  spec.config.budget = j.value("budget", 3);
  spec.config.window_s = j.value("window", 600.0);
  spec.config.isa = j.value("isa", "riscv64");
  spec.config.keyword_config = j.value("keywords", "");
  spec.config.corpus_path = j.value("corpus", "");
  spec.config.prune_rules_path = j.value("prune_rules", "");
  spec.config.tool_call_cap = j.value("tool_call_cap", 20);
  spec.workspace = j.value("workspace", "");
  spec.initial_log = j.value("log", "");
  if (j.contains("script")) spec.driver_spec = "scripted:" + j["script"].get<std::string>();
  if (j.contains("driver")) spec.driver_spec = j["driver"].get<std::string>();
  if (j.contains("session")) spec.service_spec = "sim:" + j["session"].get<std::string>();
  if (j.contains("service")) spec.service_spec = j["service"].get<std::string>();
  spec.model = j.value("model", "");
  spec.temperature = j.value("temperature", 1.0);
  spec.poll_interval_s = j.value("poll_interval", 0.05);
  spec.remote.base_url = j.value("service_url", "");
  spec.remote.project = j.value("service_project", "");
  spec.remote.repository = j.value("service_repository", "standard");
  spec.remote.arch = j.value("service_arch", spec.config.isa);
  return spec;
}

SessionReport run_from_spec(const RunSpec& spec) {
  if (spec.workspace.empty() || spec.initial_log.empty())
    raise(ErrorCode::config_error, "a session needs both a workspace and an initial log");

  std::unique_ptr<AgentDriver> driver;
  ToolRegistry registry = default_registry();
  if (starts_with(spec.driver_spec, "scripted:")) {
    std::string path = spec.driver_spec.substr(9);
    if (path.empty()) raise(ErrorCode::config_error, "scripted driver needs a script path");
    driver = std::make_unique<ScriptedDriver>(ScriptedDriver::from_file(path, &registry));
  } else if (spec.driver_spec == "remote") {
    driver = std::make_unique<RemoteDriver>(
        RemoteDriver::over_http(registry, spec.model, spec.temperature));
  } else {
    raise(ErrorCode::config_error, "unknown driver spec: " + spec.driver_spec);
  }

  std::unique_ptr<BuildService> service;
  if (starts_with(spec.service_spec, "sim:")) {
    std::string path = spec.service_spec.substr(4);
    if (path.empty()) raise(ErrorCode::config_error, "simulated service needs a session fixture");
    service = std::make_unique<SimulatedService>(load_session_fixture(path),
                                                 spec.poll_interval_s);
  } else if (spec.service_spec == "real") {
    service = std::make_unique<RemoteBuildService>(spec.remote);
  } else {
    raise(ErrorCode::config_error, "unknown service spec: " + spec.service_spec);
  }

  return run_session(spec.config, spec.workspace, spec.initial_log, *driver, *service);
}

std::vector<RunSpec> load_batch_manifest(const std::string& manifest_path) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(manifest_path));
  } catch (const json::exception& e) {
    raise(ErrorCode::config_error, std::string("bad batch manifest: ") + e.what());
  }
  if (doc.value("format", "") != "batch.v1")
    raise(ErrorCode::config_error, "expected batch.v1 document: " + manifest_path);

  const json defaults = doc.value("defaults", json::object());
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](std::string path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (base / path).string();
  };

  std::vector<RunSpec> specs;
  for (const auto& pkg : doc.value("packages", json::array())) {
    json merged = defaults;
    merged.update(pkg);
    RunSpec spec = run_spec_from_json(merged);
    spec.workspace = resolve(spec.workspace);
    spec.initial_log = resolve(spec.initial_log);
    if (starts_with(spec.driver_spec, "scripted:"))
      spec.driver_spec = "scripted:" + resolve(spec.driver_spec.substr(9));
    if (starts_with(spec.service_spec, "sim:"))
      spec.service_spec = "sim:" + resolve(spec.service_spec.substr(4));
    spec.config.corpus_path = resolve(spec.config.corpus_path);
    spec.config.keyword_config = resolve(spec.config.keyword_config);
    spec.config.prune_rules_path = resolve(spec.config.prune_rules_path);
    specs.push_back(std::move(spec));
  }
  return specs;
}

BatchResult run_batch(const std::vector<RunSpec>& specs) {
  BatchResult result;
  result.summary.total = static_cast<int>(specs.size());
  double sum_r = 0.0, sum_b = 0.0;

  for (const auto& spec : specs) {
    SessionReport report;
    try {
      report = run_from_spec(spec);
    } catch (const std::exception& e) {
      report.package_id = spec.config.package_id;
      report.outcome = SessionOutcome::failed;
      report.diagnostics = std::string("session crashed: ") + e.what();
    }
    switch (report.outcome) {
      case SessionOutcome::success: result.summary.success++; break;
      case SessionOutcome::failed: result.summary.failed++; break;
      case SessionOutcome::broken_unsolvable: result.summary.broken++; break;
    }
    for (const auto& it : report.iterations) {
      if (it.verdict == WorkflowVerdict::misordered) result.summary.misordered++;
      if (it.verdict == WorkflowVerdict::early_termination) result.summary.early_termination++;
    }
    sum_r += report.time_repair_s;
    sum_b += report.time_build_s;
    result.reports.push_back(std::move(report));
  }

  if (result.summary.total > 0) {
    result.summary.success_rate =
        format_fixed(100.0 * result.summary.success / result.summary.total, 2);
    result.summary.mean_time_repair_s = sum_r / result.summary.total;
    result.summary.mean_time_build_s = sum_b / result.summary.total;
  }
  return result;
}

json batch_to_json(const BatchResult& result) {
  json j;
  j["format"] = "report.v1";
  j["kind"] = "batch";
  j["summary"] = {{"total", result.summary.total},
                  {"success", result.summary.success},
                  {"failed", result.summary.failed},
                  {"broken_unsolvable", result.summary.broken},
                  {"success_rate",
                   result.summary.success_rate.empty() ? json(nullptr)
                                                       : json(result.summary.success_rate)},
                  {"mean_time_repair_s", result.summary.mean_time_repair_s},
                  {"mean_time_build_s", result.summary.mean_time_build_s},
                  {"misordered", result.summary.misordered},
                  {"early_termination", result.summary.early_termination}};
  j["sessions"] = json::array();
  for (const auto& r : result.reports) j["sessions"].push_back(report_to_json(r));
  return j;
}

}  // namespace evident
