#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace evident {

struct DrainParams {
  int depth = 4;            // total tree depth; depth-2 token levels below the length node
  double similarity = 0.4;  // leaf cluster admission threshold
  int max_children = 100;   // per internal node; overflow routes to the "<*>" child
};

// Fixed-depth parse-tree log template miner. Lines are tokenized on
// whitespace; numeric-looking tokens are masked to "<*>" before routing.
// Routing descends through the length node and the first depth-2 tokens;
// leaves hold clusters whose template wildcards positions that disagree.
class TemplateMiner {
 public:
  explicit TemplateMiner(DrainParams params = {});
  ~TemplateMiner();

  TemplateMiner(TemplateMiner&&) noexcept;
  TemplateMiner& operator=(TemplateMiner&&) noexcept;

  // Adds one line and returns the id of the cluster it joined.
  int add_line(const std::string& line);

  // Final template text of a cluster (wildcards reflect all lines seen).
  std::string template_of(int cluster_id) const;

  int support_of(int cluster_id) const;

  // (template, support) for every cluster, in first-seen order.
  std::vector<std::pair<std::string, int>> templates() const;

  // Pre-masked, whitespace-split tokens as the miner sees them.
  static std::vector<std::string> tokenize(const std::string& line);

  // True iff tokens of `line` match `template_text` treating "<*>" as a
  // single-token wildcard.
  static bool matches_template(const std::string& line, const std::string& template_text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace evident
