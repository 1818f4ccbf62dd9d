#include "evident/types.hpp"

#include "evident/errors.hpp"

namespace evident {

int stage_rank(BuildStage s) {
  switch (s) {
    case BuildStage::dependency_resolution: return 0;
    case BuildStage::prep: return 1;
    case BuildStage::build: return 2;
    case BuildStage::install: return 3;
    case BuildStage::check: return 4;
    case BuildStage::files: return 5;
    case BuildStage::other: return 6;
  }
  return 6;
}

const char* to_string(BuildStage s) {
  switch (s) {
    case BuildStage::dependency_resolution: return "dependency_resolution";
    case BuildStage::prep: return "prep";
    case BuildStage::build: return "build";
    case BuildStage::install: return "install";
    case BuildStage::check: return "check";
    case BuildStage::files: return "files";
    case BuildStage::other: return "other";
  }
  return "other";
}

const char* to_string(BuildStatus s) {
  switch (s) {
    case BuildStatus::succeeded: return "succeeded";
    case BuildStatus::failed: return "failed";
    case BuildStatus::unresolvable: return "unresolvable";
    case BuildStatus::timeout: return "timeout";
  }
  return "failed";
}

const char* to_string(RepairKind k) {
  switch (k) {
    case RepairKind::archive_repackage: return "archive_repackage";
    case RepairKind::config_adaptation: return "config_adaptation";
    case RepairKind::source_modification: return "source_modification";
  }
  return "source_modification";
}

const char* to_string(ValidationResult v) {
  switch (v) {
    case ValidationResult::pending: return "pending";
    case ValidationResult::confirmed_failed: return "confirmed_failed";
    case ValidationResult::confirmed_succeeded: return "confirmed_succeeded";
  }
  return "pending";
}

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::riscv64: return "riscv64";
    case Isa::aarch64: return "aarch64";
    case Isa::x86_64: return "x86_64";
    case Isa::any: return "any";
  }
  return "any";
}

const char* to_string(SessionOutcome o) {
  switch (o) {
    case SessionOutcome::success: return "Success";
    case SessionOutcome::failed: return "Failed";
    case SessionOutcome::broken_unsolvable: return "BrokenUnsolvable";
  }
  return "Failed";
}

const char* to_string(WorkflowVerdict v) {
  switch (v) {
    case WorkflowVerdict::ok: return "ok";
    case WorkflowVerdict::misordered: return "misordered";
    case WorkflowVerdict::early_termination: return "early_termination";
  }
  return "ok";
}

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& value) {
  raise(ErrorCode::config_error, std::string("unknown ") + what + ": " + value);
}

}  // namespace

BuildStage stage_from_string(const std::string& s) {
  if (s == "dependency_resolution") return BuildStage::dependency_resolution;
  if (s == "prep") return BuildStage::prep;
  if (s == "build") return BuildStage::build;
  if (s == "install") return BuildStage::install;
  if (s == "check") return BuildStage::check;
  if (s == "files") return BuildStage::files;
  if (s == "other") return BuildStage::other;
  bad_enum("build stage", s);
}

BuildStatus status_from_string(const std::string& s) {
  if (s == "succeeded") return BuildStatus::succeeded;
  if (s == "failed") return BuildStatus::failed;
  if (s == "unresolvable") return BuildStatus::unresolvable;
  if (s == "timeout") return BuildStatus::timeout;
  bad_enum("build status", s);
}

RepairKind repair_kind_from_string(const std::string& s) {
  if (s == "archive_repackage") return RepairKind::archive_repackage;
  if (s == "config_adaptation") return RepairKind::config_adaptation;
  if (s == "source_modification") return RepairKind::source_modification;
  bad_enum("repair kind", s);
}

ValidationResult validation_from_string(const std::string& s) {
  if (s == "pending") return ValidationResult::pending;
  if (s == "confirmed_failed") return ValidationResult::confirmed_failed;
  if (s == "confirmed_succeeded") return ValidationResult::confirmed_succeeded;
  bad_enum("validation result", s);
}

Isa isa_from_string(const std::string& s) {
  if (s == "riscv64") return Isa::riscv64;
  if (s == "aarch64") return Isa::aarch64;
  if (s == "x86_64") return Isa::x86_64;
  if (s == "any") return Isa::any;
  bad_enum("isa", s);
}

SessionOutcome outcome_from_string(const std::string& s) {
  if (s == "Success") return SessionOutcome::success;
  if (s == "Failed") return SessionOutcome::failed;
  if (s == "BrokenUnsolvable") return SessionOutcome::broken_unsolvable;
  bad_enum("session outcome", s);
}

WorkflowVerdict verdict_from_string(const std::string& s) {
  if (s == "ok") return WorkflowVerdict::ok;
  if (s == "misordered") return WorkflowVerdict::misordered;
  if (s == "early_termination") return WorkflowVerdict::early_termination;
  bad_enum("workflow verdict", s);
}

const char* to_string(FailureCategoryKind c) {
  switch (c) {
    case FailureCategoryKind::dependency: return "Dependency";
    case FailureCategoryKind::compilation: return "Compilation";
    case FailureCategoryKind::test: return "Test";
    case FailureCategoryKind::packaging: return "Packaging";
  }
  return "Dependency";
}

FailureCategoryKind failure_category_from_string(const std::string& s) {
  if (s == "Dependency") return FailureCategoryKind::dependency;
  if (s == "Compilation") return FailureCategoryKind::compilation;
  if (s == "Test") return FailureCategoryKind::test;
  if (s == "Packaging") return FailureCategoryKind::packaging;
  bad_enum("failure category", s);
}

json signal_to_json(const FailureSignal& s) {
  return json{{"stage", to_string(s.stage)},
              {"template", s.template_text},
              {"keywords", s.keywords},
              {"window", s.window},
              {"line_span", {s.line_span.first, s.line_span.last}},
              {"severity_rank", s.severity_rank},
              {"anchor_index", s.anchor_index},
              {"verdict_provenance", s.verdict_provenance}};
}

FailureSignal signal_from_json(const json& j) {
  FailureSignal s;
  s.stage = stage_from_string(j.at("stage").get<std::string>());
  s.template_text = j.at("template").get<std::string>();
  s.keywords = j.at("keywords").get<std::vector<std::string>>();
  s.window = j.at("window").get<std::vector<std::string>>();
  s.line_span.first = j.at("line_span").at(0).get<int>();
  s.line_span.last = j.at("line_span").at(1).get<int>();
  s.severity_rank = j.at("severity_rank").get<int>();
  s.anchor_index = j.value("anchor_index", 0);
  s.verdict_provenance = j.value("verdict_provenance", "");
  return s;
}

json signals_to_document(const std::vector<FailureSignal>& signals) {
  json arr = json::array();
  for (const auto& s : signals) arr.push_back(signal_to_json(s));
  return json{{"format", "signals.v1"}, {"signals", arr}};
}

std::vector<FailureSignal> signals_from_document(const json& doc) {
  if (doc.value("format", "") != "signals.v1")
    raise(ErrorCode::config_error, "expected a signals.v1 document");
  std::vector<FailureSignal> out;
  for (const auto& j : doc.at("signals")) out.push_back(signal_from_json(j));
  return out;
}

}  // namespace evident
