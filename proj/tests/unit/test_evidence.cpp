#include "doctest.h"
#include "evident/errors.hpp"
#include "evident/evidence.hpp"
#include "evident/util.hpp"

#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace evident;

namespace {

BuildFeedback failed_fb(int iteration, const std::string& log_ref = "log") {
  BuildFeedback fb;
  fb.iteration = iteration;
  fb.status = BuildStatus::failed;
  fb.log_ref = log_ref;
  FailureSignal s;
  s.stage = BuildStage::build;
  s.template_text = "error: something in " + log_ref;
  s.keywords = {"error"};
  s.window = {"ctx before", "error: something in " + log_ref, "ctx after"};
  s.line_span = {10, 12};
  fb.signals = {s};
  return fb;
}

HistoryEntry entry(int iteration, int sequence, RepairKind kind = RepairKind::config_adaptation,
                   const std::string& path = "pkg.spec") {
  HistoryEntry e;
  e.iteration = iteration;
  e.sequence = sequence;
  e.action_kind = kind;
  e.target_path = path;
  e.diff_summary = "--- a/" + path + "\n+++ b/" + path + "\n@@ -1 +1 @@\n-x\n+y";
  return e;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace

TEST_SUITE("evidence") {

TEST_CASE("single-feedback law: recording replaces, never accumulates") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0, "first"));
  REQUIRE(ctx.feedback());
  CHECK(ctx.feedback()->log_ref == "first");
  ctx.record_feedback(failed_fb(0, "second"));
  CHECK(ctx.feedback()->log_ref == "second");
  CHECK(ctx.feedback()->signals.size() == 1);  // replaced, not appended
}

TEST_CASE("feedback iteration must match the context") {
  EvidenceContext ctx("pkg", 3);
  CHECK(code_of([&] { ctx.record_feedback(failed_fb(2)); }) == ErrorCode::boundary_violation);
}

TEST_CASE("succeeded feedback cannot carry signals; timeout must be partial") {
  EvidenceContext ctx("pkg", 3);
  BuildFeedback ok = failed_fb(0);
  ok.status = BuildStatus::succeeded;
  CHECK(code_of([&] { ctx.record_feedback(ok); }) == ErrorCode::precondition);
  ok.signals.clear();
  ctx.record_feedback(ok);  // fine without signals

  BuildFeedback t;
  t.iteration = 0;
  t.status = BuildStatus::timeout;
  t.complete = true;
  CHECK(code_of([&] { ctx.record_feedback(t); }) == ErrorCode::precondition);
  t.complete = false;
  ctx.record_feedback(t);
}

TEST_CASE("history is append-only with per-iteration sequencing") {
  EvidenceContext ctx("pkg", 3);
  CHECK(ctx.next_sequence() == 0);
  ctx.append_history(entry(0, 0));
  CHECK(ctx.next_sequence() == 1);
  ctx.append_history(entry(0, 1));
  CHECK(ctx.history().size() == 2);

  // duplicate (iteration, sequence)
  CHECK(code_of([&] { ctx.append_history(entry(0, 1)); }) == ErrorCode::duplicate_entry);
  // gap in sequence
  CHECK(code_of([&] { ctx.append_history(entry(0, 5)); }) == ErrorCode::precondition);
  // wrong iteration
  CHECK(code_of([&] { ctx.append_history(entry(1, 0)); }) == ErrorCode::boundary_violation);
  // prior entries byte-identical
  CHECK(ctx.history()[0] == entry(0, 0));
  CHECK(ctx.history()[1] == entry(0, 1));
}

TEST_CASE("mark_validated touches only pending entries of one iteration") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  ctx.append_history(entry(0, 0));
  ctx.append_history(entry(0, 1));
  CHECK(ctx.mark_validated(0, ValidationResult::confirmed_failed) == 2);
  for (const auto& e : ctx.history()) CHECK(e.validated == ValidationResult::confirmed_failed);
  // second call: nothing pending -> 0 marked, warning recorded
  size_t warnings_before = ctx.warnings().size();
  CHECK(ctx.mark_validated(0, ValidationResult::confirmed_failed) == 0);
  CHECK(ctx.warnings().size() == warnings_before + 1);
}

TEST_CASE("findings are iteration-scoped and invalidated on advance") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  ctx.cache_finding("structure_inventory", json{{"files", 3}});
  CHECK(ctx.findings().count("structure_inventory"));
  std::string id1 = ctx.findings().at("structure_inventory").stable_id;
  // same payload -> same stable id (determinism)
  ctx.cache_finding("structure_inventory", json{{"files", 3}});
  CHECK(ctx.findings().at("structure_inventory").stable_id == id1);

  ctx.note_build_terminal();
  ctx.advance_iteration();
  CHECK(ctx.iteration() == 1);
  CHECK(ctx.findings().empty());
  CHECK(ctx.history().empty() == true);  // no entries were added
}

TEST_CASE("advance requires a terminal build and respects the budget") {
  EvidenceContext ctx("pkg", 2);
  ctx.record_feedback(failed_fb(0));
  CHECK(code_of([&] { ctx.advance_iteration(); }) == ErrorCode::precondition);

  ctx.note_build_terminal();
  ctx.advance_iteration();  // 0 -> 1
  CHECK(ctx.iteration() == 1);

  ctx.note_build_terminal();
  CHECK(code_of([&] { ctx.advance_iteration(); }) == ErrorCode::budget_exhausted);
  CHECK(ctx.iteration() == 1);  // unchanged after the failed advance
}

TEST_CASE("abort_iteration unblocks advance after a crash") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  ctx.abort_iteration("driver crashed");
  ctx.advance_iteration();
  CHECK(ctx.iteration() == 1);
  CHECK(!ctx.warnings().empty());
}

TEST_CASE("budget must be positive") {
  CHECK(code_of([] { EvidenceContext ctx("pkg", 0); }) == ErrorCode::precondition);
  CHECK(code_of([] { EvidenceContext ctx("pkg", -2); }) == ErrorCode::precondition);
}

TEST_CASE("fused prompt has all four slots in fixed order with empty markers") {
  EvidenceContext ctx("pkg", 3);
  auto prompt = ctx.fuse();
  std::string text = prompt.render();
  size_t fb = text.find("## FEEDBACK");
  size_t hi = text.find("## HISTORY");
  size_t fi = text.find("## FINDINGS");
  size_t kn = text.find("## KNOWLEDGE");
  REQUIRE(fb != std::string::npos);
  REQUIRE(hi != std::string::npos);
  REQUIRE(fi != std::string::npos);
  REQUIRE(kn != std::string::npos);
  CHECK(fb < hi);
  CHECK(hi < fi);
  CHECK(fi < kn);
  // empty slots carry explicit markers
  CHECK(prompt.slot_feedback.find("(none)") != std::string::npos);
  CHECK(prompt.slot_history.find("(no prior edits)") != std::string::npos);
  CHECK(prompt.slot_findings.find("(none)") != std::string::npos);
  CHECK(prompt.slot_knowledge.find("(none)") != std::string::npos);
}

TEST_CASE("re-rendering an unchanged context is byte-identical") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  ctx.append_history(entry(0, 0));
  ctx.cache_finding("recipe_constraints", json{{"name", "pkg"}});
  std::string a = ctx.fuse().render();
  std::string b = ctx.fuse().render();
  CHECK(a == b);
}

TEST_CASE("confirmed-failed edits become do-not-repeat rules that survive truncation") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  for (int s = 0; s < 40; ++s)
    ctx.append_history(entry(0, s, RepairKind::source_modification,
                             "src/file" + std::to_string(s) + ".c"));
  ctx.mark_validated(0, ValidationResult::confirmed_failed);

  SlotBudgets tight;
  tight.history = 600;  // forces truncation of the entry list
  auto prompt = ctx.fuse(tight);
  CHECK(prompt.slot_history.size() <= 600 + std::string("\n[truncated]").size());
  CHECK(prompt.slot_history.find("[truncated]") != std::string::npos);
  // the rule header still leads the slot even under heavy truncation
  CHECK(prompt.slot_history.find("do not repeat") != std::string::npos);
  CHECK(prompt.slot_history.find("src/file0.c") != std::string::npos);
}

TEST_CASE("feedback slot reflects only the latest build") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0, "old-log"));
  ctx.note_build_terminal();
  ctx.advance_iteration();
  ctx.record_feedback(failed_fb(1, "new-log"));
  auto prompt = ctx.fuse();
  CHECK(prompt.slot_feedback.find("new-log") != std::string::npos);
  CHECK(prompt.slot_feedback.find("old-log") == std::string::npos);
}

TEST_CASE("slot budgets cap length with an explicit marker") {
  EvidenceContext ctx("pkg", 3);
  BuildFeedback fb = failed_fb(0);
  for (int i = 0; i < 400; ++i) fb.signals[0].window.push_back("pad line " + std::to_string(i));
  ctx.record_feedback(fb);
  SlotBudgets small;
  small.feedback = 500;
  auto prompt = ctx.fuse(small);
  CHECK(prompt.slot_feedback.size() <= 500 + std::string("\n[truncated]").size());
  CHECK(prompt.slot_feedback.find("[truncated]") != std::string::npos);
}

TEST_CASE("context round-trips through JSON") {
  EvidenceContext ctx("pkg", 3);
  ctx.record_feedback(failed_fb(0));
  ctx.append_history(entry(0, 0));
  ctx.cache_finding("recipe_constraints", json{{"name", "pkg"}});
  ctx.note_build_terminal();

  json doc = ctx.to_json();
  CHECK(doc["format"] == "context.v1");
  auto back = EvidenceContext::from_json(doc);
  CHECK(back.package_id() == ctx.package_id());
  CHECK(back.iteration() == ctx.iteration());
  CHECK(back.budget() == ctx.budget());
  CHECK(back.build_terminal() == ctx.build_terminal());
  CHECK(back.feedback() == ctx.feedback());
  CHECK(back.history() == ctx.history());
  CHECK(back.findings() == ctx.findings());
  // and the restored context renders identically
  CHECK(back.fuse().render() == ctx.fuse().render());
}

TEST_CASE("random operation sequences preserve the evidence laws (property)") {
  // Compact model check: apply random valid/invalid operations; the laws
  // (single feedback, append-only ordered history, iteration-scoped
  // findings) must hold at every step.
  std::mt19937 rng(20240819);
  for (int run = 0; run < 50; ++run) {
    EvidenceContext ctx("pkg", 4);
    std::vector<HistoryEntry> shadow_history;
    int ops = 40;
    for (int i = 0; i < ops; ++i) {
      switch (rng() % 6) {
        case 0: {
          BuildFeedback fb = failed_fb(ctx.iteration(), "log-" + std::to_string(i));
          ctx.record_feedback(fb);
          CHECK(ctx.feedback()->log_ref == "log-" + std::to_string(i));
          break;
        }
        case 1: {
          HistoryEntry e = entry(ctx.iteration(), ctx.next_sequence());
          ctx.append_history(e);
          shadow_history.push_back(e);
          break;
        }
        case 2:
          ctx.cache_finding("k" + std::to_string(rng() % 3), json{{"v", i}});
          break;
        case 3:
          if (ctx.feedback()) {
            ctx.note_build_terminal();
            try {
              ctx.advance_iteration();
              CHECK(ctx.findings().empty());  // advance invalidates findings
            } catch (const Error& e) {
              CHECK(e.code() == ErrorCode::budget_exhausted);
            }
          }
          break;
        case 4:
          ctx.mark_validated(ctx.iteration(), ValidationResult::confirmed_failed);
          break;
        default: {
          // invalid op must not corrupt state
          ErrorCode c = code_of([&] { ctx.append_history(entry(ctx.iteration() + 1, 0)); });
          CHECK(c == ErrorCode::boundary_violation);
          break;
        }
      }
      // invariants after every operation
      REQUIRE(ctx.history().size() == shadow_history.size());
      for (size_t h = 0; h < shadow_history.size(); ++h) {
        CHECK(ctx.history()[h].iteration == shadow_history[h].iteration);
        CHECK(ctx.history()[h].sequence == shadow_history[h].sequence);
        CHECK(ctx.history()[h].target_path == shadow_history[h].target_path);
      }
      for (const auto& [key, finding] : ctx.findings())
        CHECK(finding.iteration == ctx.iteration());
    }
  }
}

}  // TEST_SUITE
