#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace evident {

using json = nlohmann::json;

enum class BuildStage { dependency_resolution, prep, build, install, check, files, other };

enum class BuildStatus { succeeded, failed, unresolvable, timeout };

enum class RepairKind { archive_repackage, config_adaptation, source_modification };

enum class ValidationResult { pending, confirmed_failed, confirmed_succeeded };

enum class Isa { riscv64, aarch64, x86_64, any };

enum class SessionOutcome { success, failed, broken_unsolvable };

enum class WorkflowVerdict { ok, misordered, early_termination };

// Position of a stage in the temporal order of a build; used to order
// distilled signals and for classification tie-breaks.
int stage_rank(BuildStage s);

const char* to_string(BuildStage s);
const char* to_string(BuildStatus s);
const char* to_string(RepairKind k);
const char* to_string(ValidationResult v);
const char* to_string(Isa isa);
const char* to_string(SessionOutcome o);
const char* to_string(WorkflowVerdict v);

BuildStage stage_from_string(const std::string& s);
BuildStatus status_from_string(const std::string& s);
RepairKind repair_kind_from_string(const std::string& s);
ValidationResult validation_from_string(const std::string& s);
Isa isa_from_string(const std::string& s);
SessionOutcome outcome_from_string(const std::string& s);
WorkflowVerdict verdict_from_string(const std::string& s);

// Inclusive 0-based line range in the originating log.
struct LineSpan {
  int first = 0;
  int last = 0;

  bool operator==(const LineSpan&) const = default;
};

// A distilled, stage-tagged error signature extracted from a build log.
struct FailureSignal {
  BuildStage stage = BuildStage::other;
  std::string template_text;           // abstracted event template ("<*>" wildcards)
  std::vector<std::string> keywords;   // diagnostic keywords that matched
  std::vector<std::string> window;     // verbatim context lines, bounded
  LineSpan line_span;
  int severity_rank = 2;
  int anchor_index = 0;                // index of the keyword line within window
  std::string verdict_provenance;      // which verifier retained this block

  bool operator==(const FailureSignal&) const = default;
};

json signal_to_json(const FailureSignal& s);
FailureSignal signal_from_json(const json& j);

// signals.v1 document wrapping a signal list.
json signals_to_document(const std::vector<FailureSignal>& signals);
std::vector<FailureSignal> signals_from_document(const json& doc);

// Failure taxonomy used for session reporting.
enum class FailureCategoryKind { dependency, compilation, test, packaging };

struct FailureCategory {
  FailureCategoryKind category;
  std::string subcategory;

  bool operator==(const FailureCategory&) const = default;
};

const char* to_string(FailureCategoryKind c);
FailureCategoryKind failure_category_from_string(const std::string& s);

}  // namespace evident
