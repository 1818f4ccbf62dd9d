#include "evident/workspace_inspector.hpp"

#include <algorithm>
#include <filesystem>
#include <system_error>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace fs = std::filesystem;

namespace evident {

namespace {

constexpr int kMaxEntries = 2000;

bool has_suffix_ci(const std::string& name, const char* suffix) {
  std::string lower = to_lower(name);
  std::string suf = suffix;
  return lower.size() >= suf.size() &&
         lower.compare(lower.size() - suf.size(), suf.size(), suf) == 0;
}

bool has_prefix_ci(const std::string& name, const char* prefix) {
  return starts_with(to_lower(name), prefix);
}

}  // namespace

const char* entry_kind_name(EntryKind kind) {
  switch (kind) {
    case EntryKind::recipe: return "recipe";
    case EntryKind::archive: return "archive";
    case EntryKind::script: return "script";
    case EntryKind::source: return "source";
    case EntryKind::metadata: return "metadata";
    case EntryKind::other: return "other";
  }
  return "other";
}

namespace {

EntryKind entry_kind_from_name(const std::string& name) {
  if (name == "recipe") return EntryKind::recipe;
  if (name == "archive") return EntryKind::archive;
  if (name == "script") return EntryKind::script;
  if (name == "source") return EntryKind::source;
  if (name == "metadata") return EntryKind::metadata;
  return EntryKind::other;
}

}  // namespace

EntryKind infer_kind(const std::string& filename) {
  if (has_suffix_ci(filename, ".spec")) return EntryKind::recipe;

  static const char* archive_suffixes[] = {".tar.gz", ".tar.xz",  ".tar.bz2", ".tgz",
                                           ".txz",    ".tbz2",    ".zip",     ".tar"};
  for (const char* s : archive_suffixes)
    if (has_suffix_ci(filename, s)) return EntryKind::archive;

  if (has_suffix_ci(filename, ".sh") || has_suffix_ci(filename, ".service") ||
      has_suffix_ci(filename, ".bash"))
    return EntryKind::script;

  static const char* source_suffixes[] = {
      ".c",   ".h",    ".cc",  ".hh",   ".cpp",  ".hpp", ".cxx",   ".hxx", ".c++",
      ".rs",  ".go",   ".py",  ".java", ".js",   ".ts",  ".rb",    ".pl",  ".s",
      ".asm", ".f90",  ".m4",  ".ac",   ".am",   ".in",  ".cmake", ".mk"};
  for (const char* s : source_suffixes)
    if (has_suffix_ci(filename, s)) return EntryKind::source;
  if (filename == "CMakeLists.txt" || filename == "Makefile" || filename == "makefile" ||
      filename == "configure" || filename == "meson.build")
    return EntryKind::source;

  static const char* metadata_prefixes[] = {"readme",  "license", "copying", "authors",
                                            "news",    "install", "changelog"};
  for (const char* p : metadata_prefixes)
    if (has_prefix_ci(filename, p)) return EntryKind::metadata;
  if (has_suffix_ci(filename, ".changes")) return EntryKind::metadata;

  return EntryKind::other;
}

std::vector<std::string> default_prune_rules() {
  return {
      "docs/", "doc/", ".git/", "examples/", "test/", "tests/",
      ".evident-scratch/", ".evident-history/", ".evident-logs/",
      "*.md", "*.rst", "*.png", "*.jpg", "*.gif",
      "*.o", "*.a", "*.so", "*.pyc", "*.pyo", "__pycache__/",
  };
}

std::vector<std::string> load_prune_rules(const std::string& path) {
  std::vector<std::string> rules;
  for (const auto& raw : split_lines(read_file_bytes(path))) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    rules.push_back(line);
  }
  return rules;
}

namespace {

bool pruned(const std::string& basename, bool is_dir, const std::vector<std::string>& rules) {
  for (const auto& rule : rules) {
    if (!rule.empty() && rule.back() == '/') {
      if (is_dir && glob_match(rule.substr(0, rule.size() - 1), basename)) return true;
    } else if (!is_dir && glob_match(rule, basename)) {
      return true;
    }
  }
  return false;
}

void walk(const fs::path& root, const fs::path& dir, const std::vector<std::string>& rules,
          StructureInventory& inv) {
  std::error_code ec;
  std::vector<fs::directory_entry> children;
  fs::directory_iterator it(dir, ec);
  if (ec) {
    inv.warnings.push_back("unreadable: " + fs::relative(dir, root).generic_string());
    return;
  }
  for (const auto& child : it) children.push_back(child);
  std::sort(children.begin(), children.end(),
            [](const fs::directory_entry& a, const fs::directory_entry& b) {
              return a.path().filename() < b.path().filename();
            });

  for (const auto& child : children) {
    std::error_code cec;
    const std::string name = child.path().filename().string();
    const bool is_dir = child.is_directory(cec);
    if (cec) {
      inv.warnings.push_back("unreadable: " + fs::relative(child.path(), root).generic_string());
      continue;
    }
    if (child.is_symlink()) {  // never follow links out of the workspace
      inv.pruned_count++;
      continue;
    }
    if (pruned(name, is_dir, rules)) {
      inv.pruned_count++;
      continue;
    }
    if (is_dir) {
      walk(root, child.path(), rules, inv);
      continue;
    }
    if (static_cast<int>(inv.entries.size()) >= kMaxEntries) {
      if (!inv.truncated)
        inv.warnings.push_back("listing truncated at " + std::to_string(kMaxEntries) +
                               " entries");
      inv.truncated = true;
      return;
    }
    std::uint64_t size = child.file_size(cec);
    if (cec) {
      inv.warnings.push_back("unreadable: " + fs::relative(child.path(), root).generic_string());
      continue;
    }
    inv.entries.push_back(
        {fs::relative(child.path(), root).generic_string(), infer_kind(name), size});
  }
}

}  // namespace

StructureInventory inventory(const std::string& workspace_path,
                             const std::vector<std::string>& prune_rules) {
  fs::path root(workspace_path);
  std::error_code ec;
  if (!fs::exists(root, ec) || ec || !fs::is_directory(root, ec) || ec)
    raise(ErrorCode::inspection_error, "workspace not readable: " + workspace_path);

  StructureInventory inv;
  inv.root = workspace_path;
  walk(root, root, prune_rules, inv);
  std::sort(inv.entries.begin(), inv.entries.end(),
            [](const InventoryEntry& a, const InventoryEntry& b) { return a.path < b.path; });
  return inv;
}

json inventory_to_json(const StructureInventory& inv) {
  json j;
  j["format"] = "inventory.v1";
  j["root"] = inv.root;
  j["entries"] = json::array();
  for (const auto& e : inv.entries)
    j["entries"].push_back(
        {{"path", e.path}, {"kind", entry_kind_name(e.kind)}, {"size", e.size}});
  j["pruned_count"] = inv.pruned_count;
  j["truncated"] = inv.truncated;
  j["warnings"] = inv.warnings;
  return j;
}

StructureInventory inventory_from_json(const json& j) {
  if (j.value("format", "") != "inventory.v1")
    raise(ErrorCode::config_error, "expected inventory.v1 document");
  StructureInventory inv;
  inv.root = j.value("root", "");
  for (const auto& e : j.value("entries", json::array()))
    inv.entries.push_back({e.value("path", ""), entry_kind_from_name(e.value("kind", "other")),
                           e.value("size", std::uint64_t{0})});
  inv.pruned_count = j.value("pruned_count", 0);
  inv.truncated = j.value("truncated", false);
  inv.warnings = j.value("warnings", std::vector<std::string>{});
  return inv;
}

}  // namespace evident
