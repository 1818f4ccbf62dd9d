#pragma once

#include <string>
#include <vector>

#include "evident/types.hpp"

namespace evident {

enum class EntryKind { recipe, archive, script, source, metadata, other };
const char* entry_kind_name(EntryKind kind);

struct InventoryEntry {
  std::string path;  // relative to root, '/' separators
  EntryKind kind = EntryKind::other;
  std::uint64_t size = 0;
};

struct StructureInventory {
  std::string root;
  std::vector<InventoryEntry> entries;  // lexicographic by path
  int pruned_count = 0;
  bool truncated = false;  // entry cap (2000) hit
  std::vector<std::string> warnings;
};

// Glob patterns matched against basenames; patterns ending in '/' match
// directories (pruned whole, counted once).
std::vector<std::string> default_prune_rules();
std::vector<std::string> load_prune_rules(const std::string& path);

// Throws inspection_error when root is missing/unreadable; unreadable
// children are skipped with a warning.
StructureInventory inventory(const std::string& workspace_path,
                             const std::vector<std::string>& prune_rules);

EntryKind infer_kind(const std::string& filename);

json inventory_to_json(const StructureInventory& inv);  // inventory.v1
StructureInventory inventory_from_json(const json& j);

}  // namespace evident
