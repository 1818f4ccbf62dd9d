// Command-line front end for the evident build-repair library. Talks to
// the library exclusively through its C interface.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "evident/evident.h"

namespace {

constexpr int kExitConfig = 3;

// Unique wrapper over the C API's malloc'd strings.
struct CStr {
  char* p = nullptr;
  ~CStr() { evident_free(p); }
  const char* get() const { return p ? p : ""; }
};

int fail(const char* what, int status, const CStr& err) {
  std::fprintf(stderr, "evident: %s: %s (%s)\n", what, err.get(), evident_status_name(status));
  return status == EVIDENT_E_CONFIG ? kExitConfig : 1;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

int emit(const std::string& dest, const char* text) {
  if (dest.empty() || dest == "-") {
    std::fputs(text, stdout);
    std::fputc('\n', stdout);
    return 0;
  }
  std::ofstream out(dest, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "evident: cannot write %s\n", dest.c_str());
    return kExitConfig;
  }
  out << text << '\n';
  return 0;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

// Incremental run-spec builder; the library consumes the finished JSON.
struct SpecBuilder {
  std::string body;
  void add(const std::string& key, const std::string& value) {
    if (!body.empty()) body += ", ";
    body += "\"" + json_escape(key) + "\": \"" + json_escape(value) + "\"";
  }
  void add_raw(const std::string& key, const std::string& raw) {
    if (!body.empty()) body += ", ";
    body += "\"" + json_escape(key) + "\": " + raw;
  }
  std::string str() const { return "{" + body + "}"; }
};

std::string basename_of(std::string path) {
  while (path.size() > 1 && path.back() == '/') path.pop_back();
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

std::string trim_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evident — evidence-preserving build-failure repair"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(evident_version()));

  // ---- repair ---------------------------------------------------------
  auto* repair = app.add_subcommand("repair", "Run one analysis → repair → validation session");
  std::string workspace, log_path, isa = "riscv64", driver = "scripted:", service = "sim:";
  std::string corpus, keywords, report_path, package_id, model, service_url, service_project;
  std::string service_arch, service_repo = "standard";
  int budget = 3, tool_cap = 20;
  double window = 600.0, poll = 0.05, temperature = 1.0;
  repair->add_option("--workspace", workspace, "Package workspace directory")->required();
  repair->add_option("--log", log_path, "Initial failure log")->required();
  repair->add_option("--isa", isa, "Target instruction set tag (default riscv64)");
  repair->add_option("--budget", budget, "Maximum repair iterations (default 3)");
  repair->add_option("--window", window, "Build monitoring window in seconds (default 600)");
  repair->add_option("--driver", driver, "scripted:<script.json> or remote");
  repair->add_option("--service", service, "sim:<session.json> or real");
  repair->add_option("--corpus", corpus, "Knowledge corpus (knowledge.v1 JSONL)");
  repair->add_option("--keywords", keywords, "Diagnostic keyword file");
  repair->add_option("--report", report_path, "Write the session report here ('-' = stdout)");
  repair->add_option("--package", package_id, "Package id (default: workspace basename)");
  repair->add_option("--tool-call-cap", tool_cap, "Per-iteration agent turn bound (default 20)");
  repair->add_option("--poll-interval", poll, "Service poll interval in seconds");
  repair->add_option("--model", model, "Remote driver model name");
  repair->add_option("--temperature", temperature, "Remote driver sampling temperature");
  repair->add_option("--service-url", service_url, "Real build service base URL");
  repair->add_option("--service-project", service_project, "Real build service project");
  repair->add_option("--service-repository", service_repo, "Real build service repository");
  repair->add_option("--service-arch", service_arch, "Real build service architecture");

  // ---- batch ----------------------------------------------------------
  auto* batch = app.add_subcommand("batch", "Run every session in a batch manifest");
  std::string manifest, batch_report;
  batch->add_option("--manifest", manifest, "batch.v1 manifest file")->required();
  batch->add_option("--report", batch_report, "Write the batch report here ('-' = stdout)");

  // ---- distill --------------------------------------------------------
  auto* distill = app.add_subcommand("distill", "Condense a build log into failure signals");
  std::string d_log, d_keywords, d_out = "-";
  int d_window = 0;
  distill->add_option("--log", d_log, "Build log file")->required();
  distill->add_option("--keywords", d_keywords, "Diagnostic keyword file");
  distill->add_option("--window", d_window, "Context lines around each keyword hit");
  distill->add_option("--emit-signals", d_out, "Signals output path ('-' = stdout)");

  // ---- recipe ---------------------------------------------------------
  auto* recipe = app.add_subcommand("recipe", "Parse a build recipe into structured JSON");
  std::string r_file, r_out = "-";
  bool r_render = false;
  recipe->add_option("--recipe", r_file, "Recipe file (.spec) or recipe.v1 JSON with --render")
      ->required();
  recipe->add_option("--emit-recipe", r_out, "Output path ('-' = stdout)");
  recipe->add_flag("--render", r_render, "Treat input as recipe.v1 JSON and render recipe text");

  // ---- inventory ------------------------------------------------------
  auto* inv = app.add_subcommand("inventory", "Summarize a workspace's file structure");
  std::string i_root, i_prune, i_out = "-";
  inv->add_option("--root", i_root, "Directory to walk")->required();
  inv->add_option("--prune", i_prune, "Prune rule file (one pattern per line)");
  inv->add_option("--emit-inventory", i_out, "Output path ('-' = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;  // --help exits 0; bad usage is a config error
  }

  if (repair->parsed()) {
    SpecBuilder spec;
    spec.add("package_id", package_id.empty() ? basename_of(workspace) : package_id);
    spec.add("workspace", workspace);
    spec.add("log", log_path);
    spec.add("isa", isa);
    spec.add("driver", driver);
    spec.add("service", service);
    spec.add_raw("budget", std::to_string(budget));
    spec.add_raw("window", trim_float(window));
    spec.add_raw("tool_call_cap", std::to_string(tool_cap));
    spec.add_raw("poll_interval", trim_float(poll));
    if (!corpus.empty()) spec.add("corpus", corpus);
    if (!keywords.empty()) spec.add("keywords", keywords);
    if (!model.empty()) spec.add("model", model);
    spec.add_raw("temperature", trim_float(temperature));
    if (!service_url.empty()) spec.add("service_url", service_url);
    if (!service_project.empty()) spec.add("service_project", service_project);
    if (!service_repo.empty()) spec.add("service_repository", service_repo);
    spec.add("service_arch", service_arch.empty() ? isa : service_arch);

    CStr report, err;
    int outcome = 1;
    int rc = evident_run_session(spec.str().c_str(), &report.p, &outcome, &err.p);
    if (rc != EVIDENT_OK) return fail("repair", rc, err);
    if (int erc = emit(report_path, report.get())) return erc;
    return outcome;
  }

  if (batch->parsed()) {
    CStr out, err;
    int rc = evident_run_batch(manifest.c_str(), &out.p, &err.p);
    if (rc != EVIDENT_OK) return fail("batch", rc, err);
    return emit(batch_report, out.get());
  }

  if (distill->parsed()) {
    std::string text;
    if (!read_file(d_log, text)) {
      std::fprintf(stderr, "evident: cannot read %s\n", d_log.c_str());
      return kExitConfig;
    }
    CStr out, err;
    int rc = evident_distill(text.c_str(), d_keywords.empty() ? nullptr : d_keywords.c_str(),
                             d_window, &out.p, &err.p);
    if (rc != EVIDENT_OK) return fail("distill", rc, err);
    return emit(d_out, out.get());
  }

  if (recipe->parsed()) {
    std::string text;
    if (!read_file(r_file, text)) {
      std::fprintf(stderr, "evident: cannot read %s\n", r_file.c_str());
      return kExitConfig;
    }
    CStr out, err;
    int rc = r_render ? evident_render_recipe(text.c_str(), &out.p, &err.p)
                      : evident_parse_recipe(text.c_str(), &out.p, &err.p);
    if (rc != EVIDENT_OK) return fail("recipe", rc, err);
    return emit(r_out, out.get());
  }

  if (inv->parsed()) {
    CStr out, err;
    int rc = evident_inventory(i_root.c_str(), i_prune.empty() ? nullptr : i_prune.c_str(),
                               &out.p, &err.p);
    if (rc != EVIDENT_OK) return fail("inventory", rc, err);
    return emit(i_out, out.get());
  }

  return kExitConfig;
}
