#include "doctest.h"
#include "evident/errors.hpp"
#include "evident/util.hpp"
#include "evident/workspace_inspector.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace evident;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() / ("evident-inv-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  void file(const std::string& rel, const std::string& content = "x") {
    fs::path p = root / rel;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << content;
  }
  void dir(const std::string& rel) { fs::create_directories(root / rel); }
};

const InventoryEntry* find(const StructureInventory& inv, const std::string& path) {
  for (const auto& e : inv.entries)
    if (e.path == path) return &e;
  return nullptr;
}

}  // namespace

TEST_SUITE("inspector") {

TEST_CASE("kind inference by filename") {
  CHECK(infer_kind("pkg.spec") == EntryKind::recipe);
  CHECK(infer_kind("src-1.2.tar.gz") == EntryKind::archive);
  CHECK(infer_kind("bundle.zip") == EntryKind::archive);
  CHECK(infer_kind("build.sh") == EntryKind::script);
  CHECK(infer_kind("daemon.service") == EntryKind::script);
  CHECK(infer_kind("main.c") == EntryKind::source);
  CHECK(infer_kind("mod.rs") == EntryKind::source);
  CHECK(infer_kind("CMakeLists.txt") == EntryKind::source);
  CHECK(infer_kind("Makefile") == EntryKind::source);
  CHECK(infer_kind("README") == EntryKind::metadata);
  CHECK(infer_kind("LICENSE") == EntryKind::metadata);
  CHECK(infer_kind("pkg.changes") == EntryKind::metadata);
  CHECK(infer_kind("random.bin") == EntryKind::other);
}

TEST_CASE("walk produces sorted relative paths with sizes") {
  TempTree t;
  t.file("pkg.spec", "Name: pkg\n");
  t.file("src/main.c", "int main(){}\n");
  t.file("src/util.c", "// util\n");
  t.dir("empty");

  auto inv = inventory(t.root.string(), {});
  std::vector<std::string> paths;
  for (const auto& e : inv.entries) paths.push_back(e.path);
  CHECK(std::is_sorted(paths.begin(), paths.end()));
  REQUIRE(find(inv, "pkg.spec"));
  CHECK(find(inv, "pkg.spec")->kind == EntryKind::recipe);
  CHECK(find(inv, "pkg.spec")->size == 10);
  REQUIRE(find(inv, "src/main.c"));
  CHECK(find(inv, "src/main.c")->kind == EntryKind::source);
  CHECK(inv.pruned_count == 0);
  CHECK_FALSE(inv.truncated);
}

TEST_CASE("prune rules drop files by glob and directories wholesale") {
  TempTree t;
  t.file("pkg.spec");
  t.file("README.md");
  t.file("notes.rst");
  t.file("docs/guide.txt");
  t.file("docs/deep/more.txt");
  t.file("src/main.c");
  t.file("src/main.o");

  auto inv = inventory(t.root.string(), {"*.md", "*.rst", "docs/", "*.o"});
  CHECK(find(inv, "pkg.spec"));
  CHECK(find(inv, "src/main.c"));
  CHECK_FALSE(find(inv, "README.md"));
  CHECK_FALSE(find(inv, "notes.rst"));
  CHECK_FALSE(find(inv, "docs/guide.txt"));
  CHECK_FALSE(find(inv, "src/main.o"));
  // README.md + notes.rst + main.o + docs/ (counted once, not recursed)
  CHECK(inv.pruned_count == 4);
}

TEST_CASE("default prune rules cover generated and internal directories") {
  auto rules = default_prune_rules();
  auto has = [&](const std::string& r) {
    return std::find(rules.begin(), rules.end(), r) != rules.end();
  };
  CHECK(has(".git/"));
  CHECK(has(".evident-scratch/"));
  CHECK(has(".evident-history/"));
  CHECK(has("*.o"));
  CHECK(has("__pycache__/"));
}

TEST_CASE("entry cap truncates the listing and says so") {
  TempTree t;
  for (int i = 0; i < 2100; ++i)
    t.file("many/f" + std::to_string(i) + ".txt", "");
  auto inv = inventory(t.root.string(), {});
  CHECK(inv.entries.size() <= 2000);
  CHECK(inv.truncated);
  bool mentioned = false;
  for (const auto& w : inv.warnings)
    if (w.find("2000") != std::string::npos || w.find("truncat") != std::string::npos)
      mentioned = true;
  CHECK(mentioned);
}

TEST_CASE("symlinks are pruned, not followed") {
  TempTree t;
  t.file("real.txt");
  std::error_code ec;
  fs::create_symlink(t.root / "real.txt", t.root / "link.txt", ec);
  if (ec) return;  // filesystem without symlink support; nothing to check
  auto inv = inventory(t.root.string(), {});
  CHECK(find(inv, "real.txt"));
  CHECK_FALSE(find(inv, "link.txt"));
  CHECK(inv.pruned_count == 1);
}

TEST_CASE("missing root raises inspection-error") {
  try {
    inventory("/nonexistent/evident/root", {});
    FAIL("expected inspection-error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::inspection_error);
  }
}

TEST_CASE("inventory round-trips through JSON") {
  TempTree t;
  t.file("pkg.spec");
  t.file("src/a.c");
  auto inv = inventory(t.root.string(), {});
  json doc = inventory_to_json(inv);
  CHECK(doc["format"] == "inventory.v1");
  auto back = inventory_from_json(doc);
  CHECK(back.root == inv.root);
  REQUIRE(back.entries.size() == inv.entries.size());
  for (size_t i = 0; i < inv.entries.size(); ++i) {
    CHECK(back.entries[i].path == inv.entries[i].path);
    CHECK(back.entries[i].kind == inv.entries[i].kind);
    CHECK(back.entries[i].size == inv.entries[i].size);
  }
  CHECK(back.pruned_count == inv.pruned_count);
  CHECK(back.truncated == inv.truncated);
}

TEST_CASE("prune rule file: one pattern per line with comments") {
  TempTree t;
  t.file("rules.conf", "# prune these\n*.log\ncache/\n\n");
  auto rules = load_prune_rules((t.root / "rules.conf").string());
  CHECK(rules == std::vector<std::string>{"*.log", "cache/"});
}

}  // TEST_SUITE
