#pragma once

#include <string>
#include <vector>

#include "evident/archive.hpp"
#include "evident/evidence.hpp"
#include "evident/types.hpp"

namespace evident {

// One artifact-level repair. new_content is always a complete replacement,
// never a fragment; tombstone deletes the target instead.
struct RepairAction {
  RepairKind kind = RepairKind::config_adaptation;
  std::string target_path;  // workspace-relative
  std::string new_content;
  std::string rationale;
  bool create = false;
  bool tombstone = false;
};

// Applies repair actions inside one workspace, records full unified diffs
// under <workspace>/.evident-history/iter<k>-seq<n>.diff, and returns
// history entries whose diff_summary is capped at 200 lines.
class RepairEngine {
 public:
  explicit RepairEngine(std::string workspace_root);

  const std::string& workspace() const { return root_; }

  // Source modifications whose target lies under this handle's scratch
  // area are routed through the handle so its manifest stays in sync.
  void attach_archive(ArchiveHandle* handle);

  HistoryEntry apply(const RepairAction& action, int iteration, int sequence);

  std::string read_file(const std::string& rel_path) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::string root_;
  std::vector<ArchiveHandle*> archives_;
  std::vector<std::string> warnings_;

  std::string resolve(const std::string& rel_path) const;  // path-escape guard
  HistoryEntry apply_file_edit(const RepairAction& action, int iteration, int sequence);
  HistoryEntry apply_repackage(const RepairAction& action, int iteration, int sequence);
  void store_diff(int iteration, int sequence, const std::string& full_diff);
};

}  // namespace evident
