#include "evident/log_distiller.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

namespace {

// "[   95s] " elapsed-time prefixes that build services stamp on every line.
const std::regex kTimePrefix{R"(^\[\s*\d+s\]\s?)"};

// Progress tickers ("[ 42%] ...", "[12/340] ...") that carry no diagnostic
// content. Lines mentioning failure-ish words are kept regardless.
const std::regex kProgressLine{R"(^\[\s*\d+(%|/\d+)\]\s)"};
const std::regex kProgressSafety{R"(error|fail|fatal|undefined|assert|abort)",
                                 std::regex::icase};

struct StageMarker {
  BuildStage stage;
  std::regex pattern;
};

const std::vector<StageMarker>& stage_markers() {
  static const std::vector<StageMarker> markers = {
      {BuildStage::prep, std::regex(R"(^(Executing\(%prep\)|\+ %prep\b|%prep\b))")},
      {BuildStage::build, std::regex(R"(^(Executing\(%build\)|\+ %build\b|%build\b))")},
      {BuildStage::install, std::regex(R"(^(Executing\(%install\)|\+ %install\b|%install\b))")},
      {BuildStage::check, std::regex(R"(^(Executing\(%check\)|\+ %check\b|%check\b))")},
      {BuildStage::files, std::regex(R"(^(Processing files:|\+ %files\b|%files\b))")},
  };
  return markers;
}

// Resolver output that places the leading region under dependency resolution.
const std::regex kResolverHint{
    R"(nothing provides|unresolvable|expansion error|have choice for|conflicts with)"};

std::optional<BuildStage> match_stage_marker(const std::string& line) {
  for (const auto& m : stage_markers())
    if (std::regex_search(line, m.pattern)) return m.stage;
  return std::nullopt;
}

// Replaces absolute-path tokens (>= 2 separators) with "<PATH>/basename",
// but never when the replacement would lengthen the token.
std::string abbreviate_paths(const std::string& line) {
  std::string out;
  out.reserve(line.size());
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      out.push_back(line[i++]);
      continue;
    }
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    std::string tok = line.substr(i, j - i);
    if (tok.size() > 1 && tok[0] == '/' &&
        std::count(tok.begin(), tok.end(), '/') >= 2) {
      size_t slash = tok.rfind('/');
      std::string repl = "<PATH>/" + tok.substr(slash + 1);
      if (repl.size() <= tok.size()) tok = std::move(repl);
    }
    out += tok;
    i = j;
  }
  return out;
}

bool is_progress_line(const std::string& line) {
  return std::regex_search(line, kProgressLine) &&
         !std::regex_search(line, kProgressSafety);
}

}  // namespace

const std::vector<std::string>& default_keywords() {
  static const std::vector<std::string> keywords = {
      "error:",
      "fatal error",
      "undefined reference",
      "No such file",
      "nothing provides",
      "unresolvable",
      "FAILED",
      "Traceback",
      "AssertionError",
      "segmentation fault",
      "Segmentation fault",
      "command not found",
      "No module named",
      "ModuleNotFoundError",
      "ImportError",
      "cannot find",
      "configure: error",
      "CMake Error",
      "make: ***",
      "ld returned",
      "internal compiler error",
      "Bad exit status",
      "implicit declaration",
      "assertion failed",
      "conflicts with",
      "Installed (but unpackaged)",
      "File not found",
  };
  return keywords;
}

std::vector<std::string> load_keywords(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& raw : split_lines(read_file_bytes(path))) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::vector<LogSegment> condense(const std::string& raw_log) {
  std::vector<LogSegment> segments;
  if (raw_log.empty()) return segments;

  const std::string clean = sanitize_utf8(raw_log);
  const auto raw_lines = split_lines(clean);

  LogSegment current;
  current.stage = BuildStage::other;
  bool saw_resolver_hint = false;
  bool first_segment = true;
  std::string prev_norm;
  bool have_prev = false;

  auto flush = [&](BuildStage next_stage) {
    if (!current.lines.empty()) {
      current.origin_span = {current.origin_lines.front(), current.origin_lines.back()};
      // the leading region is resolver output when it looks like it
      if (first_segment && saw_resolver_hint && current.stage == BuildStage::other)
        current.stage = BuildStage::dependency_resolution;
      segments.push_back(std::move(current));
      first_segment = false;
    }
    current = LogSegment{};
    current.stage = next_stage;
    have_prev = false;
  };

  for (size_t idx = 0; idx < raw_lines.size(); ++idx) {
    std::string line = std::regex_replace(raw_lines[idx], kTimePrefix, "");
    if (auto stage = match_stage_marker(line)) {
      flush(*stage);
      current.lines.push_back(line);
      current.origin_lines.push_back(static_cast<int>(idx));
      prev_norm = line;
      have_prev = true;
      continue;
    }
    if (is_progress_line(line)) continue;
    line = abbreviate_paths(line);
    if (have_prev && line == prev_norm) continue;  // collapse duplicate runs
    if (std::regex_search(line, kResolverHint)) saw_resolver_hint = true;
    current.lines.push_back(line);
    current.origin_lines.push_back(static_cast<int>(idx));
    prev_norm = line;
    have_prev = true;
  }
  flush(BuildStage::other);
  return segments;
}

std::vector<CandidateBlock> extract_windows(const std::vector<LogSegment>& segments,
                                            const std::vector<std::string>& keywords,
                                            int window) {
  if (window < 0) raise(ErrorCode::precondition, "window must be >= 0");
  std::vector<CandidateBlock> blocks;

  for (const auto& seg : segments) {
    const int n = static_cast<int>(seg.lines.size());
    struct Hit {
      int line;
      std::vector<std::string> keywords;
    };
    std::vector<Hit> hits;
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> matched;
      for (const auto& kw : keywords)
        if (contains_ci(seg.lines[static_cast<size_t>(i)], kw)) matched.push_back(kw);
      if (!matched.empty()) hits.push_back({i, std::move(matched)});
    }
    size_t h = 0;
    while (h < hits.size()) {
      int begin = std::max(0, hits[h].line - window);
      int end = std::min(n - 1, hits[h].line + window);
      CandidateBlock block;
      block.stage = seg.stage;
      block.anchor_index = hits[h].line - begin;
      block.matched_keywords = hits[h].keywords;
      size_t next = h + 1;
      // merge hits whose windows overlap or touch
      while (next < hits.size() && hits[next].line - window <= end + 1) {
        end = std::min(n - 1, hits[next].line + window);
        for (const auto& kw : hits[next].keywords)
          if (std::find(block.matched_keywords.begin(), block.matched_keywords.end(), kw) ==
              block.matched_keywords.end())
            block.matched_keywords.push_back(kw);
        ++next;
      }
      for (int i = begin; i <= end; ++i) {
        block.lines.push_back(seg.lines[static_cast<size_t>(i)]);
        block.origin_lines.push_back(seg.origin_lines[static_cast<size_t>(i)]);
      }
      block.span = {block.origin_lines.front(), block.origin_lines.back()};
      blocks.push_back(std::move(block));
      h = next;
    }
  }
  return blocks;
}

std::vector<std::pair<std::string, int>> mine_templates(const std::vector<CandidateBlock>& blocks,
                                                        DrainParams params) {
  TemplateMiner miner(params);
  for (const auto& b : blocks)
    for (const auto& line : b.lines) miner.add_line(line);
  return miner.templates();
}

namespace {

// Error patterns the fallback verifier accepts as explicit failure evidence.
const std::regex kFallbackErrorPatterns{
    R"(error[:\s]|error$|fatal|failed|FAILED|undefined reference|Traceback|AssertionError)"
    R"(|segmentation fault|No such file|nothing provides|unresolvable|cannot find)"
    R"(|command not found|No module named|\*\*\*|assertion|Bad exit status)",
    std::regex::icase};

}  // namespace

VerifierVerdict FallbackVerifier::verify(const CandidateBlock& block, const std::string&) {
  for (const auto& line : block.lines) {
    if (std::regex_search(line, kFallbackErrorPatterns))
      return {true, "fallback", "explicit error pattern"};
  }
  return {false, "fallback", "no explicit error pattern"};
}

VerifierVerdict ScriptedVerifier::verify(const CandidateBlock& block,
                                         const std::string& template_text) {
  return {decide_(block, template_text), "scripted", ""};
}

VerifierVerdict GuardedVerifier::verify(const CandidateBlock& block,
                                        const std::string& template_text) {
  try {
    bool keep = source_(block, template_text);
    return {keep, provenance_, ""};
  } catch (const std::exception& e) {
    auto verdict = fallback_.verify(block, template_text);
    verdict.note = std::string("verifier unavailable (") + e.what() + "), fallback used";
    return verdict;
  }
}

std::vector<CandidateBlock> verify_blocks(const std::vector<CandidateBlock>& blocks,
                                          Verifier& verifier,
                                          std::vector<VerifierVerdict>* verdicts) {
  std::vector<CandidateBlock> kept;
  for (const auto& b : blocks) {
    std::string anchor = b.lines.empty() ? "" : b.lines[static_cast<size_t>(b.anchor_index)];
    auto verdict = verifier.verify(b, anchor);
    if (verdict.keep) {
      kept.push_back(b);
      if (verdicts) verdicts->push_back(verdict);
    }
  }
  return kept;
}

std::vector<FailureSignal> distill(const std::string& raw_log, const DistillOptions& options) {
  const auto& keywords = options.keywords.empty() ? default_keywords() : options.keywords;
  auto segments = condense(raw_log);
  auto blocks = extract_windows(segments, keywords, options.window);

  TemplateMiner miner(options.drain);
  std::vector<int> anchor_cluster(blocks.size(), -1);
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    for (size_t li = 0; li < blocks[bi].lines.size(); ++li) {
      int cid = miner.add_line(blocks[bi].lines[li]);
      if (static_cast<int>(li) == blocks[bi].anchor_index) anchor_cluster[bi] = cid;
    }
  }

  FallbackVerifier fallback;
  Verifier& verifier = options.verifier ? *options.verifier : fallback;

  std::vector<FailureSignal> signals;
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& b = blocks[bi];
    std::string template_text =
        anchor_cluster[bi] >= 0 ? miner.template_of(anchor_cluster[bi]) : "";
    auto verdict = verifier.verify(b, template_text);
    if (!verdict.keep) continue;

    FailureSignal s;
    s.stage = b.stage;
    s.template_text = template_text;
    s.keywords = b.matched_keywords;
    s.anchor_index = b.anchor_index;
    s.window = b.lines;
    if (static_cast<int>(s.window.size()) > options.max_window_lines) {
      // keep the anchor inside the capped window
      int keep = options.max_window_lines;
      int begin = std::clamp(b.anchor_index - keep / 2, 0,
                             static_cast<int>(s.window.size()) - keep);
      s.window.assign(b.lines.begin() + begin, b.lines.begin() + begin + keep);
      s.anchor_index = b.anchor_index - begin;
      s.line_span = {b.origin_lines[static_cast<size_t>(begin)],
                     b.origin_lines[static_cast<size_t>(begin + keep - 1)]};
    } else {
      s.line_span = b.span;
    }
    s.verdict_provenance = verdict.provenance;

    // severity: hard diagnostics first, generic failure markers second
    std::string joined = to_lower(template_text);
    if (joined.find("fatal") != std::string::npos ||
        joined.find("error") != std::string::npos ||
        joined.find("traceback") != std::string::npos)
      s.severity_rank = 0;
    else if (joined.find("fail") != std::string::npos ||
             joined.find("assert") != std::string::npos)
      s.severity_rank = 1;
    else
      s.severity_rank = 2;
    signals.push_back(std::move(s));
  }

  std::stable_sort(signals.begin(), signals.end(), [](const FailureSignal& a, const FailureSignal& b) {
    if (stage_rank(a.stage) != stage_rank(b.stage)) return stage_rank(a.stage) < stage_rank(b.stage);
    return a.line_span.first < b.line_span.first;
  });
  return signals;
}

namespace {

bool any_signal_contains(const std::vector<FailureSignal>& signals, const char* needle) {
  for (const auto& s : signals) {
    if (contains_ci(s.template_text, needle)) return true;
    for (const auto& w : s.window)
      if (contains_ci(w, needle)) return true;
  }
  return false;
}

bool signal_contains(const FailureSignal& s, const char* needle) {
  if (contains_ci(s.template_text, needle)) return true;
  for (const auto& w : s.window)
    if (contains_ci(w, needle)) return true;
  return false;
}

FailureCategoryKind category_of(const FailureSignal& s) {
  if (s.stage == BuildStage::dependency_resolution || signal_contains(s, "nothing provides") ||
      signal_contains(s, "No module named") || signal_contains(s, "ModuleNotFoundError") ||
      signal_contains(s, "command not found"))
    return FailureCategoryKind::dependency;
  if (s.stage == BuildStage::check) return FailureCategoryKind::test;
  if (s.stage == BuildStage::install || s.stage == BuildStage::files ||
      signal_contains(s, "Installed (but unpackaged)") || signal_contains(s, "File not found") ||
      signal_contains(s, "Bad exit status"))
    return FailureCategoryKind::packaging;
  return FailureCategoryKind::compilation;
}

std::string subcategory_of(FailureCategoryKind kind, const std::vector<FailureSignal>& signals) {
  switch (kind) {
    case FailureCategoryKind::dependency:
      if (any_signal_contains(signals, "conflict") || any_signal_contains(signals, "incompatible"))
        return "Dependency Conflict";
      return "Missing Dependency";
    case FailureCategoryKind::compilation:
      if (any_signal_contains(signals, "deprecated") ||
          any_signal_contains(signals, "implicit declaration"))
        return "API & Function Issues";
      if (any_signal_contains(signals, "configure: error") ||
          any_signal_contains(signals, "CMake Error") || any_signal_contains(signals, "make: ***") ||
          any_signal_contains(signals, "unrecognized command-line option"))
        return "Build Errors";
      return "Code-Level Issues";
    case FailureCategoryKind::test:
      if (any_signal_contains(signals, "AssertionError") || any_signal_contains(signals, "assert"))
        return "Assertion & Compliance Violations";
      if (any_signal_contains(signals, "segmentation fault") ||
          any_signal_contains(signals, "error collecting") ||
          any_signal_contains(signals, "command not found") ||
          any_signal_contains(signals, "no tests ran"))
        return "Test Execution Problems";
      return "Code & Compatibility Issues";
    case FailureCategoryKind::packaging:
      if (any_signal_contains(signals, "Installed (but unpackaged)") ||
          any_signal_contains(signals, "File not found"))
        return "Installation/Verification Failures";
      return "Packaging Configuration Errors";
  }
  return "Missing Dependency";
}

}  // namespace

std::optional<FailureCategory> classify(const std::vector<FailureSignal>& signals) {
  if (signals.empty()) return std::nullopt;
  // signals arrive stage-ordered; the earliest-stage signal decides
  const FailureSignal* earliest = &signals.front();
  for (const auto& s : signals)
    if (stage_rank(s.stage) < stage_rank(earliest->stage)) earliest = &s;
  FailureCategoryKind kind = category_of(*earliest);
  return FailureCategory{kind, subcategory_of(kind, signals)};
}

}  // namespace evident
