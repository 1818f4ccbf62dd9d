#pragma once

#include <map>
#include <string>
#include <vector>

#include "evident/types.hpp"

namespace evident {

// One curated knowledge item: a historical failure note, PR-review excerpt,
// or ISA-specific hint. Retrieved by similarity against failure signals.
struct KnowledgeEntry {
  std::string id;
  std::string isa;  // "riscv64", "aarch64", "x86_64", or "any"
  std::string text;
  std::vector<std::string> tags;
  std::string source;
};

struct QueryHit {
  std::string id;
  double similarity = 0.0;
};

// TF-IDF index over entry texts, restricted at build time to one ISA
// (entries tagged `any` always pass the filter). Immutable once built.
class TfIdfIndex {
 public:
  // isa_filter empty = keep the whole corpus
  static TfIdfIndex build(const std::vector<KnowledgeEntry>& corpus,
                          const std::string& isa_filter = "");

  // query text = signal templates + keywords + ISA hint
  std::vector<QueryHit> query(const std::vector<FailureSignal>& signals,
                              const std::string& isa_hint, int k = 5,
                              double threshold = 0.15) const;
  std::vector<QueryHit> query_text(const std::string& text, int k = 5,
                                   double threshold = 0.15) const;

  const KnowledgeEntry* entry(const std::string& id) const;
  size_t size() const { return entries_.size(); }

  // exposed so tests can check the weighting against a brute-force oracle
  static std::vector<std::string> tokenize(const std::string& text);
  double idf(const std::string& term) const;  // ln(N/df) + 1; 0 if unseen

 private:
  std::vector<KnowledgeEntry> entries_;
  std::vector<std::map<std::string, double>> vectors_;  // L2-normalized
  std::map<std::string, int> df_;
};

// knowledge.v1: one JSON entry per line, blank lines skipped.
std::vector<KnowledgeEntry> load_knowledge(const std::string& path);
void save_knowledge(const std::string& path, const std::vector<KnowledgeEntry>& entries);

}  // namespace evident
