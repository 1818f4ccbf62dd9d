// Exercises the shared library strictly through its C surface: evident.h
// plus test-side helpers. Structured results are checked by parsing the
// returned JSON documents.
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "doctest.h"
#include "evident/evident.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// owns one C-string result; frees it through the library allocator
struct CStr {
  char* p = nullptr;
  ~CStr() { evident_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

fs::path fixtures_dir() {
  const char* env = std::getenv("EVIDENT_FIXTURES");
  REQUIRE_MESSAGE(env != nullptr, "EVIDENT_FIXTURES must point at tests/fixtures");
  return fs::path(env);
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_all(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  REQUIRE(out.good());
}

struct TempDir {
  fs::path root;
  TempDir() {
    root = fs::temp_directory_path() /
           ("evident-capi-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(root);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

const char* kFailLog =
    "[ 11s] Executing(%build): /bin/sh -e /var/tmp/rpm-tmp.42\n"
    "[ 12s] gcc -O2 -c render.c\n"
    "[ 13s] render.c:88: error: implicit declaration of function 'png_create_read_struct'\n"
    "[ 14s] make: *** [render.o] Error 1\n";

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and status names are stable strings") {
    CHECK(std::string(evident_version()) == "1.0.0");
    CHECK(std::string(evident_status_name(EVIDENT_OK)) == "ok");
    CHECK(std::string(evident_status_name(EVIDENT_E_CONFIG)) == "config-error");
    CHECK(std::string(evident_status_name(EVIDENT_E_BROKEN_ARCHIVE)) == "broken-archive");
    CHECK(std::string(evident_status_name(EVIDENT_E_INTERNAL)) == "internal_error");
    evident_free(nullptr);          // owning nothing is fine
    evident_archive_close(nullptr); // closing nothing is fine
    evident_knowledge_close(nullptr);
  }

  TEST_CASE("null arguments are preconditions with messages, not crashes") {
    CStr out, err;
    CHECK(evident_distill(nullptr, nullptr, 0, out.out(), err.out()) ==
          EVIDENT_E_PRECONDITION);
    REQUIRE(err.p != nullptr);
    CHECK(err.str().find("must not be NULL") != std::string::npos);
    CHECK(out.p == nullptr);

    CHECK(evident_parse_recipe("Name: x\n", nullptr, nullptr) == EVIDENT_E_PRECONDITION);
    CHECK(evident_run_session(nullptr, out.out(), nullptr, nullptr) ==
          EVIDENT_E_PRECONDITION);
  }

  TEST_CASE("distillation and classification cross the boundary intact") {
    CStr signals, err;
    REQUIRE(evident_distill(kFailLog, nullptr, 0, signals.out(), err.out()) == EVIDENT_OK);
    CHECK(err.p == nullptr);
    json doc = json::parse(signals.str());
    CHECK(doc["format"] == "signals.v1");
    REQUIRE(doc["signals"].size() >= 1);
    CHECK(doc["signals"][0]["stage"] == "build");

    CStr category;
    REQUIRE(evident_classify(signals.p, category.out(), nullptr) == EVIDENT_OK);
    json cat = json::parse(category.str());
    CHECK(cat["category"] == "Compilation");

    // an empty signal list has no category
    CStr none;
    REQUIRE(evident_classify(R"({"format":"signals.v1","signals":[]})", none.out(),
                             nullptr) == EVIDENT_OK);
    CHECK(json::parse(none.str()).is_null());

    // malformed input is a config error with a message
    CStr bad, bad_err;
    CHECK(evident_classify("{oops", bad.out(), bad_err.out()) == EVIDENT_E_CONFIG);
    REQUIRE(bad_err.p != nullptr);
  }

  TEST_CASE("recipes parse to recipe.v1 and render back byte-identically") {
    std::string text = read_all(fixtures_dir() / "recipes" / "simple.spec");
    CStr parsed, err;
    REQUIRE(evident_parse_recipe(text.c_str(), parsed.out(), err.out()) == EVIDENT_OK);
    json doc = json::parse(parsed.str());
    CHECK(doc["format"] == "recipe.v1");
    CHECK(doc["name"] == "hello");

    CStr rendered;
    REQUIRE(evident_render_recipe(parsed.p, rendered.out(), nullptr) == EVIDENT_OK);
    CHECK(rendered.str() == text);

    CStr broken, broken_err;
    CHECK(evident_parse_recipe("Version: 1\n", broken.out(), broken_err.out()) ==
          EVIDENT_E_BROKEN_RECIPE);
    REQUIRE(broken_err.p != nullptr);
    CHECK(broken_err.str().find("Name") != std::string::npos);
  }

  TEST_CASE("inventories walk a tree and flag bad roots") {
    TempDir dir;
    write_all(dir.root / "pkg.spec", "Name: demo\n");
    write_all(dir.root / "src" / "main.c", "int main;\n");

    CStr inv;
    REQUIRE(evident_inventory(dir.root.string().c_str(), nullptr, inv.out(), nullptr) ==
            EVIDENT_OK);
    json doc = json::parse(inv.str());
    CHECK(doc["format"] == "inventory.v1");
    CHECK(doc["entries"].size() >= 2);

    CStr missing, err;
    CHECK(evident_inventory((dir.root / "absent").string().c_str(), nullptr, missing.out(),
                            err.out()) == EVIDENT_E_INSPECTION);
  }

  TEST_CASE("the archive handle lifecycle works end to end") {
    TempDir dir;
    fs::path work = dir.root / "ws";
    fs::create_directories(work);
    fs::path archive = work / "sample-1.0.tar.gz";
    fs::copy_file(fixtures_dir() / "archives" / "sample-1.0.tar.gz", archive);

    evident_archive* handle = nullptr;
    CStr err;
    REQUIRE(evident_archive_unpack(archive.string().c_str(), work.string().c_str(), &handle,
                                   err.out()) == EVIDENT_OK);
    REQUIRE(handle != nullptr);

    CStr manifest;
    REQUIRE(evident_archive_manifest(handle, manifest.out(), nullptr) == EVIDENT_OK);
    json members = json::parse(manifest.str());
    bool saw_hello = false;
    for (const auto& m : members) saw_hello |= m["path"] == "sample-1.0/hello.c";
    CHECK(saw_hello);

    CStr content;
    size_t size = 0;
    REQUIRE(evident_archive_read(handle, "sample-1.0/hello.c", content.out(), &size,
                                 nullptr) == EVIDENT_OK);
    CHECK(size == content.str().size());
    CHECK(content.str().find("hello from sample") != std::string::npos);

    const std::string replacement = "int main(void) { return 7; }\n";
    REQUIRE(evident_archive_edit(handle, "sample-1.0/hello.c", replacement.data(),
                                 replacement.size(), 0, nullptr) == EVIDENT_OK);
    REQUIRE(evident_archive_edit(handle, "sample-1.0/NEWS", "news\n", 5, 1, nullptr) ==
            EVIDENT_OK);
    REQUIRE(evident_archive_remove(handle, "sample-1.0/docs/readme.txt", nullptr) ==
            EVIDENT_OK);

    // absent members surface the dedicated status
    CStr gone, gone_err;
    CHECK(evident_archive_read(handle, "sample-1.0/absent.c", gone.out(), nullptr,
                               gone_err.out()) == EVIDENT_E_MISSING_MEMBER);

    REQUIRE(evident_archive_repack(handle, nullptr) == EVIDENT_OK);
    evident_archive_close(handle);

    // a fresh unpack of the rewritten archive sees every edit
    evident_archive* reread = nullptr;
    REQUIRE(evident_archive_unpack(archive.string().c_str(),
                                   (dir.root / "verify").string().c_str(), &reread,
                                   nullptr) == EVIDENT_OK);
    CStr after;
    REQUIRE(evident_archive_read(reread, "sample-1.0/hello.c", after.out(), nullptr,
                                 nullptr) == EVIDENT_OK);
    CHECK(after.str() == replacement);
    CStr news;
    CHECK(evident_archive_read(reread, "sample-1.0/NEWS", news.out(), nullptr, nullptr) ==
          EVIDENT_OK);
    CStr removed, removed_err;
    CHECK(evident_archive_read(reread, "sample-1.0/docs/readme.txt", removed.out(), nullptr,
                               removed_err.out()) == EVIDENT_E_MISSING_MEMBER);
    evident_archive_close(reread);

    // corrupt bytes behind a known extension are a broken archive
    write_all(dir.root / "junk.tar.gz", "definitely not gzip");
    evident_archive* bad = nullptr;
    CStr bad_err;
    CHECK(evident_archive_unpack((dir.root / "junk.tar.gz").string().c_str(),
                                 dir.root.string().c_str(), &bad,
                                 bad_err.out()) == EVIDENT_E_BROKEN_ARCHIVE);
    CHECK(bad == nullptr);
  }

  TEST_CASE("knowledge retrieval works over the C surface") {
    std::string corpus = (fixtures_dir() / "corpus" / "hints.jsonl").string();

    evident_knowledge* handle = nullptr;
    CStr err;
    REQUIRE(evident_knowledge_open(corpus.c_str(), "riscv64", &handle, err.out()) ==
            EVIDENT_OK);
    REQUIRE(handle != nullptr);

    CStr signals;
    REQUIRE(evident_distill(
                "ld: prog.o: undefined reference to `__atomic_fetch_add_8'\n"
                "collect2: error: ld returned 1 exit status\n",
                nullptr, 0, signals.out(), nullptr) == EVIDENT_OK);

    CStr hits;
    REQUIRE(evident_knowledge_query(handle, signals.p, "riscv64", 0, -1.0, hits.out(),
                                    nullptr) == EVIDENT_OK);
    json docs = json::parse(hits.str());
    REQUIRE(docs.size() >= 1);
    CHECK(docs[0]["id"] == "hint-riscv-atomics");
    CHECK(docs[0]["similarity"].get<double>() > 0.15);
    CHECK(docs[0]["text"].get<std::string>().find("-latomic") != std::string::npos);
    evident_knowledge_close(handle);

    evident_knowledge* missing = nullptr;
    CStr open_err;
    CHECK(evident_knowledge_open((fixtures_dir() / "corpus" / "absent.jsonl").string().c_str(),
                                 nullptr, &missing, open_err.out()) != EVIDENT_OK);
    CHECK(missing == nullptr);
  }

  TEST_CASE("sessions run from a JSON spec with the outcome code exposed") {
    TempDir dir;
    write_all(dir.root / "ws" / "pkg.spec",
              "Name: demo\nVersion: 1.0\nRelease: 1\nSummary: d\nLicense: MIT\n");
    write_all(dir.root / "initial.log", kFailLog);
    write_all(dir.root / "fix.script.json", R"({
      "format": "script.v1",
      "turns": [
        {"tool": "apply_config",
         "arguments": {"path": "pkg.spec",
                       "content": "Name: demo\nVersion: 1.0\nRelease: 2\nSummary: d\nLicense: MIT\n"}},
        {"tool": "submit_build", "arguments": {}}
      ]
    })");
    write_all(dir.root / "ok.session.json",
              R"({"format": "session.v1", "steps": [{"terminal": "succeeded", "log": "ok"}]})");
    write_all(dir.root / "fail.session.json",
              R"({"format": "session.v1",
                  "steps": [{"terminal": "failed", "log": "x.c:1: error: nope\n"}]})");

    json spec{{"package_id", "demo"},
              {"workspace", (dir.root / "ws").string()},
              {"log", (dir.root / "initial.log").string()},
              {"script", (dir.root / "fix.script.json").string()},
              {"session", (dir.root / "ok.session.json").string()},
              {"budget", 1},
              {"window", 5.0}};

    CStr report;
    int outcome = -1;
    REQUIRE(evident_run_session(spec.dump().c_str(), report.out(), &outcome, nullptr) ==
            EVIDENT_OK);
    CHECK(outcome == 0);
    json doc = json::parse(report.str());
    CHECK(doc["format"] == "report.v1");
    CHECK(doc["kind"] == "session");
    CHECK(doc["outcome"] == "Success");
    CHECK(doc["iterations_used"] == 1);

    // a failing session is still a clean library call; the outcome says failed
    json fail_spec = spec;
    fail_spec["session"] = (dir.root / "fail.session.json").string();
    fail_spec["workspace"] = (dir.root / "ws").string();
    CStr fail_report;
    outcome = -1;
    REQUIRE(evident_run_session(fail_spec.dump().c_str(), fail_report.out(), &outcome,
                                nullptr) == EVIDENT_OK);
    CHECK(outcome == 1);
    CHECK(json::parse(fail_report.str())["outcome"] == "Failed");

    // broken input: outcome code 2
    json broken_spec = spec;
    broken_spec["workspace"] = (dir.root / "nowhere").string();
    CStr broken_report;
    outcome = -1;
    REQUIRE(evident_run_session(broken_spec.dump().c_str(), broken_report.out(), &outcome,
                                nullptr) == EVIDENT_OK);
    CHECK(outcome == 2);
    CHECK(json::parse(broken_report.str())["outcome"] == "BrokenUnsolvable");

    // an unusable spec is a config error status, not a report
    CStr no_report, cfg_err;
    CHECK(evident_run_session(R"({"package_id": "demo"})", no_report.out(), nullptr,
                              cfg_err.out()) == EVIDENT_E_CONFIG);
    REQUIRE(cfg_err.p != nullptr);
  }

  TEST_CASE("batches run from a manifest path") {
    TempDir dir;
    write_all(dir.root / "ws_a" / "pkg.spec",
              "Name: a\nVersion: 1\nRelease: 1\nSummary: a\nLicense: MIT\n");
    write_all(dir.root / "ws_b" / "pkg.spec",
              "Name: b\nVersion: 1\nRelease: 1\nSummary: b\nLicense: MIT\n");
    write_all(dir.root / "initial.log", kFailLog);
    write_all(dir.root / "fix.script.json", R"({
      "format": "script.v1",
      "turns": [
        {"tool": "apply_config", "arguments": {"path": "pkg.spec", "content": "Name: z\n"}},
        {"tool": "submit_build", "arguments": {}}
      ]
    })");
    write_all(dir.root / "ok.session.json",
              R"({"format": "session.v1", "steps": [{"terminal": "succeeded", "log": "ok"}]})");
    write_all(dir.root / "fail.session.json",
              R"({"format": "session.v1",
                  "steps": [{"terminal": "failed", "log": "y.c:2: error: no\n"}]})");
    write_all(dir.root / "batch.json", R"({
      "format": "batch.v1",
      "defaults": {"log": "initial.log", "budget": 1, "window": 5.0,
                   "script": "fix.script.json"},
      "packages": [
        {"package_id": "a", "workspace": "ws_a", "session": "ok.session.json"},
        {"package_id": "b", "workspace": "ws_b", "session": "fail.session.json"}
      ]
    })");

    CStr out, err;
    REQUIRE(evident_run_batch((dir.root / "batch.json").string().c_str(), out.out(),
                              err.out()) == EVIDENT_OK);
    json doc = json::parse(out.str());
    CHECK(doc["kind"] == "batch");
    CHECK(doc["summary"]["total"] == 2);
    CHECK(doc["summary"]["success"] == 1);
    CHECK(doc["summary"]["success_rate"] == "50.00");
    CHECK(doc["sessions"].size() == 2);

    CStr none, missing_err;
    CHECK(evident_run_batch((dir.root / "none.json").string().c_str(), none.out(),
                            missing_err.out()) != EVIDENT_OK);
  }
}
