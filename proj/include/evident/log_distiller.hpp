#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evident/drain.hpp"
#include "evident/types.hpp"

namespace evident {

// A stage-tagged slice of a condensed log. Lines are normalized (time
// prefixes stripped, paths abbreviated, consecutive duplicates collapsed)
// and each keeps the 0-based line number it came from in the raw log.
struct LogSegment {
  std::vector<std::string> lines;
  std::vector<int> origin_lines;  // parallel to lines
  LineSpan origin_span;
  BuildStage stage = BuildStage::other;
};

// A keyword-anchored window of consecutive segment lines.
struct CandidateBlock {
  std::vector<std::string> lines;
  std::vector<int> origin_lines;
  LineSpan span;
  BuildStage stage = BuildStage::other;
  std::vector<std::string> matched_keywords;
  int anchor_index = 0;  // first keyword hit within lines
};

struct VerifierVerdict {
  bool keep = false;
  std::string provenance;  // "fallback", "scripted", "remote"
  std::string note;
};

// Classifies candidate blocks; retained blocks become failure signals.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual VerifierVerdict verify(const CandidateBlock& block,
                                 const std::string& template_text) = 0;
};

// Deterministic regex/keyword classifier used when no model is available
// (and as the safety net when a remote verifier errors out).
class FallbackVerifier : public Verifier {
 public:
  VerifierVerdict verify(const CandidateBlock& block, const std::string& template_text) override;
};

// Test/replay verifier driven by a fixed decision function.
class ScriptedVerifier : public Verifier {
 public:
  using Decision = std::function<bool(const CandidateBlock&, const std::string&)>;
  explicit ScriptedVerifier(Decision decide) : decide_(std::move(decide)) {}
  VerifierVerdict verify(const CandidateBlock& block, const std::string& template_text) override;

 private:
  Decision decide_;
};

// Wraps an unreliable verdict source (e.g. a remote model); any failure
// falls back to the deterministic classifier and flags the provenance.
class GuardedVerifier : public Verifier {
 public:
  using Source = std::function<bool(const CandidateBlock&, const std::string&)>;
  GuardedVerifier(Source source, std::string provenance)
      : source_(std::move(source)), provenance_(std::move(provenance)) {}
  VerifierVerdict verify(const CandidateBlock& block, const std::string& template_text) override;

 private:
  Source source_;
  std::string provenance_;
  FallbackVerifier fallback_;
};

struct DistillOptions {
  std::vector<std::string> keywords;  // empty -> default_keywords()
  int window = 3;                     // context lines each side of a hit
  int max_window_lines = 16;          // cap on lines kept per signal
  DrainParams drain;
  Verifier* verifier = nullptr;       // null -> FallbackVerifier
};

// Shipped diagnostic keyword list (also data/keywords.conf).
const std::vector<std::string>& default_keywords();

// Keyword config file: one keyword per line, '#' comments, blanks ignored.
std::vector<std::string> load_keywords(const std::string& path);

// Anomaly-focused condensation: UTF-8 sanitization, "[ 12s]" prefix
// stripping, progress-line filtering, path placeholders, consecutive-
// duplicate collapsing, and stage segmentation.
std::vector<LogSegment> condense(const std::string& raw_log);

std::vector<CandidateBlock> extract_windows(const std::vector<LogSegment>& segments,
                                            const std::vector<std::string>& keywords,
                                            int window);

std::vector<std::pair<std::string, int>> mine_templates(const std::vector<CandidateBlock>& blocks,
                                                        DrainParams params = {});

std::vector<CandidateBlock> verify_blocks(const std::vector<CandidateBlock>& blocks,
                                          Verifier& verifier,
                                          std::vector<VerifierVerdict>* verdicts = nullptr);

// Full pipeline: condense -> windows -> templates -> verify -> signals,
// ordered by build-stage position in the log.
std::vector<FailureSignal> distill(const std::string& raw_log, const DistillOptions& options = {});

// Maps signals onto the failure taxonomy; nullopt when signals are empty.
std::optional<FailureCategory> classify(const std::vector<FailureSignal>& signals);

}  // namespace evident
