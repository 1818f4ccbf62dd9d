#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "evident/archive.hpp"
#include "evident/diff.hpp"
#include "evident/errors.hpp"
#include "evident/repair_engine.hpp"
#include "evident/util.hpp"

using namespace evident;
namespace fs = std::filesystem;

namespace {

struct TempWorkspace {
  fs::path root;
  TempWorkspace() {
    root = fs::temp_directory_path() /
           ("evident-repair-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(root);
  }
  ~TempWorkspace() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  std::string str() const { return root.string(); }
  void put(const std::string& rel, const std::string& content) const {
    fs::path p = root / rel;
    fs::create_directories(p.parent_path());
    write_file_atomic(p.string(), content);
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace

TEST_SUITE("repair") {
  TEST_CASE("constructing on a missing workspace fails") {
    CHECK(code_of([] { RepairEngine("/nonexistent/evident-ws"); }) == ErrorCode::not_found);
  }

  TEST_CASE("targets may not escape the workspace") {
    TempWorkspace ws;
    RepairEngine eng(ws.str());
    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.new_content = "x\n";

    a.target_path = "/etc/passwd";
    CHECK(code_of([&] { eng.apply(a, 0, 1); }) == ErrorCode::path_escape);

    a.target_path = "../outside.txt";
    CHECK(code_of([&] { eng.apply(a, 0, 1); }) == ErrorCode::path_escape);

    // normalization happens before the check, so nested traversal is caught
    a.target_path = "sub/../../outside.txt";
    CHECK(code_of([&] { eng.apply(a, 0, 1); }) == ErrorCode::path_escape);

    CHECK(code_of([&] { eng.read_file("../secret"); }) == ErrorCode::path_escape);
  }

  TEST_CASE("editing an existing file records a full diff and a capped summary") {
    TempWorkspace ws;
    ws.put("pkg.spec", "Name: demo\nVersion: 1\n");
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::config_adaptation;
    a.target_path = "pkg.spec";
    a.new_content = "Name: demo\nVersion: 2\n";
    a.rationale = "bump";

    HistoryEntry e = eng.apply(a, 2, 1);
    CHECK(e.iteration == 2);
    CHECK(e.sequence == 1);
    CHECK(e.action_kind == RepairKind::config_adaptation);
    CHECK(e.target_path == "pkg.spec");
    CHECK(e.diff_summary.find("--- a/pkg.spec") != std::string::npos);
    CHECK(e.diff_summary.find("+++ b/pkg.spec") != std::string::npos);
    CHECK(e.diff_summary.find("-Version: 1") != std::string::npos);
    CHECK(e.diff_summary.find("+Version: 2") != std::string::npos);

    // the workspace file actually changed
    CHECK(eng.read_file("pkg.spec") == a.new_content);

    // full diff stored under .evident-history, applying it reproduces the edit
    fs::path stored = ws.root / ".evident-history" / "iter2-seq1.diff";
    REQUIRE(fs::exists(stored));
    std::string full = read_file_bytes(stored.string());
    CHECK(e.diff_summary == truncate_diff(full, 200));
    CHECK(apply_unified_diff("Name: demo\nVersion: 1\n", full) == a.new_content);

    // recipe target: no configuration warning
    CHECK(eng.warnings().empty());
  }

  TEST_CASE("create edits diff from /dev/null and make parent directories") {
    TempWorkspace ws;
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.target_path = "src/new/module.c";
    a.new_content = "int main(void) { return 0; }\n";
    a.create = true;

    HistoryEntry e = eng.apply(a, 0, 1);
    CHECK(e.diff_summary.find("--- /dev/null") != std::string::npos);
    CHECK(e.diff_summary.find("+++ b/src/new/module.c") != std::string::npos);
    CHECK(eng.read_file("src/new/module.c") == a.new_content);

    // the same action without create is an error on an absent target
    RepairAction b = a;
    b.target_path = "src/other.c";
    b.create = false;
    CHECK(code_of([&] { eng.apply(b, 0, 2); }) == ErrorCode::not_found);
  }

  TEST_CASE("tombstones diff to /dev/null and delete the target") {
    TempWorkspace ws;
    ws.put("obsolete.patch", "--- junk\n");
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.target_path = "obsolete.patch";
    a.tombstone = true;

    HistoryEntry e = eng.apply(a, 1, 1);
    CHECK(e.diff_summary.find("--- a/obsolete.patch") != std::string::npos);
    CHECK(e.diff_summary.find("+++ /dev/null") != std::string::npos);
    CHECK_FALSE(fs::exists(ws.root / "obsolete.patch"));

    // deleting something that is not there is an error, not a no-op
    CHECK(code_of([&] { eng.apply(a, 1, 2); }) == ErrorCode::not_found);
  }

  TEST_CASE("binary targets reject text replacements for source modifications") {
    TempWorkspace ws;
    std::string binary("BIN\0DATA\0", 9);
    ws.put("blob.dat", binary);
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.target_path = "blob.dat";
    a.new_content = "plain text\n";
    CHECK(code_of([&] { eng.apply(a, 0, 1); }) == ErrorCode::encoding_mismatch);

    // binary-for-binary replacement is allowed
    a.new_content = std::string("NEW\0BYTES", 9);
    HistoryEntry e = eng.apply(a, 0, 1);
    CHECK(eng.read_file("blob.dat") == a.new_content);
    CHECK_FALSE(e.diff_summary.empty());
  }

  TEST_CASE("config adaptation on a non-recipe target is applied but flagged") {
    TempWorkspace ws;
    ws.put("main.c", "int x;\n");
    ws.put("build.sh", "make\n");
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::config_adaptation;
    a.target_path = "main.c";
    a.new_content = "int y;\n";
    eng.apply(a, 0, 1);
    REQUIRE(eng.warnings().size() == 1);
    CHECK(eng.warnings()[0].find("non-recipe/script") != std::string::npos);
    CHECK(eng.warnings()[0].find("main.c") != std::string::npos);
    CHECK(eng.read_file("main.c") == "int y;\n");  // warned, not blocked

    // scripts are a legitimate configuration surface
    a.target_path = "build.sh";
    a.new_content = "make -j1\n";
    eng.apply(a, 0, 2);
    CHECK(eng.warnings().size() == 1);
  }

  TEST_CASE("an edit that changes nothing yields an empty summary and a warning") {
    TempWorkspace ws;
    ws.put("pkg.spec", "Name: demo\n");
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::config_adaptation;
    a.target_path = "pkg.spec";
    a.new_content = "Name: demo\n";

    HistoryEntry e = eng.apply(a, 3, 2);
    CHECK(e.diff_summary.empty());
    REQUIRE(eng.warnings().size() == 1);
    CHECK(eng.warnings()[0].find("no content change") != std::string::npos);

    // the stored diff exists but is empty, keeping the numbering dense
    fs::path stored = ws.root / ".evident-history" / "iter3-seq2.diff";
    REQUIRE(fs::exists(stored));
    CHECK(read_file_bytes(stored.string()).empty());
  }

  TEST_CASE("summaries are capped at 200 lines while the stored diff is complete") {
    TempWorkspace ws;
    std::string before, after;
    for (int i = 0; i < 300; ++i) {
      before += "line " + std::to_string(i) + "\n";
      after += "line " + std::to_string(i) + " changed\n";
    }
    ws.put("big.c", before);
    RepairEngine eng(ws.str());

    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.target_path = "big.c";
    a.new_content = after;
    HistoryEntry e = eng.apply(a, 0, 1);

    auto summary_lines = split_lines(e.diff_summary);
    REQUIRE(summary_lines.size() == 201);  // 200 kept + truncation marker
    CHECK(summary_lines.back() == "[truncated]");

    std::string full =
        read_file_bytes((ws.root / ".evident-history" / "iter0-seq1.diff").string());
    CHECK(split_lines(full).size() > 201);
    CHECK(apply_unified_diff(before, full) == after);
  }

  TEST_CASE("edits under an unpacked archive go through its handle") {
    TempWorkspace ws;

    // build a source archive with two members, then unpack it
    fs::path tree = ws.root / "tree";
    fs::create_directories(tree / "demo-1.0");
    write_file_atomic((tree / "demo-1.0" / "main.c").string(), "int main() {}\n");
    write_file_atomic((tree / "demo-1.0" / "notes.txt").string(), "n\n");
    std::string archive = (ws.root / "demo-1.0.tar.gz").string();
    pack_directory(tree.string(), archive, ArchiveFormat::tar_gz);
    fs::remove_all(tree);

    ArchiveHandle handle = ArchiveHandle::unpack(archive, ws.str());
    RepairEngine eng(ws.str());
    eng.attach_archive(&handle);

    std::string member_rel =
        fs::relative(handle.scratch_dir(), ws.root).generic_string() + "/demo-1.0/main.c";

    RepairAction a;
    a.kind = RepairKind::source_modification;
    a.target_path = member_rel;
    a.new_content = "int main() { return 0; }\n";
    HistoryEntry e = eng.apply(a, 0, 1);
    CHECK(e.diff_summary.find("-int main() {}") != std::string::npos);

    // the handle saw the edit: manifest in sync, marked dirty
    CHECK(handle.dirty());
    CHECK(handle.read_member("demo-1.0/main.c") == a.new_content);

    // absent member without create reports missing_member, not not_found
    RepairAction b = a;
    b.target_path = fs::relative(handle.scratch_dir(), ws.root).generic_string() +
                    "/demo-1.0/absent.c";
    CHECK(code_of([&] { eng.apply(b, 0, 2); }) == ErrorCode::missing_member);

    // tombstone removes the member from the manifest
    RepairAction t;
    t.kind = RepairKind::source_modification;
    t.target_path = fs::relative(handle.scratch_dir(), ws.root).generic_string() +
                    "/demo-1.0/notes.txt";
    t.tombstone = true;
    eng.apply(t, 0, 3);
    CHECK_FALSE(handle.contains("demo-1.0/notes.txt"));

    // a scratch-area path with no attached archive is a hard precondition
    RepairEngine bare(ws.str());
    CHECK(code_of([&] { bare.apply(a, 0, 1); }) == ErrorCode::precondition);
  }

  TEST_CASE("repackage rewrites the archive and reports the member count") {
    TempWorkspace ws;
    fs::path tree = ws.root / "tree";
    fs::create_directories(tree / "demo-1.0");
    write_file_atomic((tree / "demo-1.0" / "main.c").string(), "int main() {}\n");
    std::string archive = (ws.root / "demo-1.0.tar.gz").string();
    pack_directory(tree.string(), archive, ArchiveFormat::tar_gz);
    fs::remove_all(tree);

    ArchiveHandle handle = ArchiveHandle::unpack(archive, ws.str());
    RepairEngine eng(ws.str());
    eng.attach_archive(&handle);

    std::string member_rel =
        fs::relative(handle.scratch_dir(), ws.root).generic_string() + "/demo-1.0/main.c";
    RepairAction edit;
    edit.kind = RepairKind::source_modification;
    edit.target_path = member_rel;
    edit.new_content = "int main() { return 1; }\n";
    eng.apply(edit, 0, 1);
    REQUIRE(handle.dirty());

    RepairAction pack;
    pack.kind = RepairKind::archive_repackage;
    pack.target_path = "demo-1.0.tar.gz";
    HistoryEntry e = eng.apply(pack, 0, 2);
    CHECK_FALSE(handle.dirty());
    CHECK(e.action_kind == RepairKind::archive_repackage);
    CHECK(e.diff_summary ==
          "repacked demo-1.0.tar.gz (" + std::to_string(handle.manifest().size()) +
              " members, tar.gz)");

    // the rewritten archive really contains the edit
    ArchiveHandle reread = ArchiveHandle::unpack(archive, (ws.root / "verify").string());
    CHECK(reread.read_member("demo-1.0/main.c") == edit.new_content);

    // repackaging something that was never unpacked is a precondition error
    RepairAction other = pack;
    other.target_path = "never-unpacked.tar.gz";
    CHECK(code_of([&] { eng.apply(other, 0, 3); }) == ErrorCode::precondition);
  }
}
