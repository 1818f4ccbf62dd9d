#include "evident/evident.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "evident/archive.hpp"
#include "evident/errors.hpp"
#include "evident/knowledge_base.hpp"
#include "evident/log_distiller.hpp"
#include "evident/orchestrator.hpp"
#include "evident/recipe_analyzer.hpp"
#include "evident/util.hpp"
#include "evident/workspace_inspector.hpp"

using namespace evident;

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void set_err(char** err_out, const std::string& message) {
  if (err_out) *err_out = dup_string(message);
}

// Runs fn inside the exception barrier; nothing C++ crosses the C boundary.
template <typename Fn>
int guarded(char** err_out, Fn&& fn) {
  try {
    fn();
    return EVIDENT_OK;
  } catch (const Error& e) {
    set_err(err_out, e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    set_err(err_out, e.what());
    return EVIDENT_E_INTERNAL;
  } catch (...) {
    set_err(err_out, "unknown failure");
    return EVIDENT_E_INTERNAL;
  }
}

int require(const void* p, const char* what, char** err_out) {
  if (p) return EVIDENT_OK;
  set_err(err_out, std::string(what) + " must not be NULL");
  return EVIDENT_E_PRECONDITION;
}

json parse_json_arg(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::config_error, std::string(what) + ": " + e.what());
  }
}

}  // namespace

struct evident_archive {
  ArchiveHandle handle;
};

struct evident_knowledge {
  TfIdfIndex index;
};

extern "C" {

const char* evident_version(void) { return "1.0.0"; }

const char* evident_status_name(int status) {
  if (status == EVIDENT_E_INTERNAL) return "internal_error";
  return error_code_name(static_cast<ErrorCode>(status));
}

void evident_free(char* p) { std::free(p); }

int evident_distill(const char* log_text, const char* keyword_path, int window,
                    char** signals_json_out, char** err_out) {
  if (int rc = require(log_text, "log_text", err_out)) return rc;
  if (int rc = require(signals_json_out, "signals_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    DistillOptions opts;
    if (keyword_path && *keyword_path) opts.keywords = load_keywords(keyword_path);
    if (window > 0) opts.window = window;
    auto signals = distill(log_text, opts);
    *signals_json_out = dup_string(signals_to_document(signals).dump(2));
  });
}

int evident_classify(const char* signals_json, char** category_json_out, char** err_out) {
  if (int rc = require(signals_json, "signals_json", err_out)) return rc;
  if (int rc = require(category_json_out, "category_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    auto signals = signals_from_document(parse_json_arg(signals_json, "signals_json"));
    json doc;
    if (auto category = classify(signals)) {
      doc["category"] = to_string(category->category);
      doc["subcategory"] = category->subcategory;
    } else {
      doc = nullptr;
    }
    *category_json_out = dup_string(doc.dump(2));
  });
}

int evident_parse_recipe(const char* recipe_text, char** recipe_json_out, char** err_out) {
  if (int rc = require(recipe_text, "recipe_text", err_out)) return rc;
  if (int rc = require(recipe_json_out, "recipe_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    *recipe_json_out = dup_string(recipe_to_json(parse_recipe(recipe_text)).dump(2));
  });
}

int evident_render_recipe(const char* recipe_json, char** text_out, char** err_out) {
  if (int rc = require(recipe_json, "recipe_json", err_out)) return rc;
  if (int rc = require(text_out, "text_out", err_out)) return rc;
  return guarded(err_out, [&] {
    auto rc = recipe_from_json(parse_json_arg(recipe_json, "recipe_json"));
    *text_out = dup_string(render_recipe(rc));
  });
}

int evident_inventory(const char* root, const char* prune_path, char** inventory_json_out,
                      char** err_out) {
  if (int rc = require(root, "root", err_out)) return rc;
  if (int rc = require(inventory_json_out, "inventory_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    std::vector<std::string> rules =
        (prune_path && *prune_path) ? load_prune_rules(prune_path) : default_prune_rules();
    *inventory_json_out = dup_string(inventory_to_json(inventory(root, rules)).dump(2));
  });
}

int evident_archive_unpack(const char* archive_path, const char* workspace_root,
                           evident_archive** handle_out, char** err_out) {
  if (int rc = require(archive_path, "archive_path", err_out)) return rc;
  if (int rc = require(workspace_root, "workspace_root", err_out)) return rc;
  if (int rc = require(handle_out, "handle_out", err_out)) return rc;
  return guarded(err_out, [&] {
    auto owned = std::make_unique<evident_archive>(
        evident_archive{ArchiveHandle::unpack(archive_path, workspace_root)});
    *handle_out = owned.release();
  });
}

int evident_archive_manifest(evident_archive* handle, char** manifest_json_out, char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  if (int rc = require(manifest_json_out, "manifest_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    json members = json::array();
    for (const auto& m : handle->handle.manifest())
      members.push_back({{"path", m.path}, {"sha256", m.sha256}, {"mode", m.mode}});
    *manifest_json_out = dup_string(members.dump(2));
  });
}

int evident_archive_read(evident_archive* handle, const char* member_path, char** content_out,
                         size_t* size_out, char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  if (int rc = require(member_path, "member_path", err_out)) return rc;
  if (int rc = require(content_out, "content_out", err_out)) return rc;
  return guarded(err_out, [&] {
    std::string content = handle->handle.read_member(member_path);
    if (size_out) *size_out = content.size();
    *content_out = dup_string(content);  // NUL-terminated; size_out covers binary data
  });
}

int evident_archive_edit(evident_archive* handle, const char* member_path, const char* content,
                         size_t size, int create_if_missing, char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  if (int rc = require(member_path, "member_path", err_out)) return rc;
  if (int rc = require(content, "content", err_out)) return rc;
  return guarded(err_out, [&] {
    handle->handle.edit_member(member_path, std::string(content, size), create_if_missing != 0);
  });
}

int evident_archive_remove(evident_archive* handle, const char* member_path, char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  if (int rc = require(member_path, "member_path", err_out)) return rc;
  return guarded(err_out, [&] { handle->handle.remove_member(member_path); });
}

int evident_archive_repack(evident_archive* handle, char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  return guarded(err_out, [&] { handle->handle.repack(); });
}

void evident_archive_close(evident_archive* handle) { delete handle; }

int evident_knowledge_open(const char* corpus_path, const char* isa_filter,
                           evident_knowledge** handle_out, char** err_out) {
  if (int rc = require(corpus_path, "corpus_path", err_out)) return rc;
  if (int rc = require(handle_out, "handle_out", err_out)) return rc;
  return guarded(err_out, [&] {
    auto owned = std::make_unique<evident_knowledge>();
    owned->index = TfIdfIndex::build(load_knowledge(corpus_path), isa_filter ? isa_filter : "");
    *handle_out = owned.release();
  });
}

int evident_knowledge_query(evident_knowledge* handle, const char* signals_json,
                            const char* isa_hint, int k, double threshold, char** hits_json_out,
                            char** err_out) {
  if (int rc = require(handle, "handle", err_out)) return rc;
  if (int rc = require(signals_json, "signals_json", err_out)) return rc;
  if (int rc = require(hits_json_out, "hits_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    auto signals = signals_from_document(parse_json_arg(signals_json, "signals_json"));
    auto hits = handle->index.query(signals, isa_hint ? isa_hint : "", k > 0 ? k : 5,
                                    threshold >= 0 ? threshold : 0.15);
    json doc = json::array();
    for (const auto& hit : hits) {
      json h{{"id", hit.id}, {"similarity", hit.similarity}};
      if (const KnowledgeEntry* entry = handle->index.entry(hit.id)) h["text"] = entry->text;
      doc.push_back(std::move(h));
    }
    *hits_json_out = dup_string(doc.dump(2));
  });
}

void evident_knowledge_close(evident_knowledge* handle) { delete handle; }

int evident_run_session(const char* run_spec_json, char** report_json_out, int* outcome_code_out,
                        char** err_out) {
  if (int rc = require(run_spec_json, "run_spec_json", err_out)) return rc;
  if (int rc = require(report_json_out, "report_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    RunSpec spec = run_spec_from_json(parse_json_arg(run_spec_json, "run_spec_json"));
    SessionReport report = run_from_spec(spec);
    if (outcome_code_out) {
      switch (report.outcome) {
        case SessionOutcome::success: *outcome_code_out = 0; break;
        case SessionOutcome::failed: *outcome_code_out = 1; break;
        case SessionOutcome::broken_unsolvable: *outcome_code_out = 2; break;
      }
    }
    *report_json_out = dup_string(report_to_json(report).dump(2));
  });
}

int evident_run_batch(const char* manifest_path, char** batch_json_out, char** err_out) {
  if (int rc = require(manifest_path, "manifest_path", err_out)) return rc;
  if (int rc = require(batch_json_out, "batch_json_out", err_out)) return rc;
  return guarded(err_out, [&] {
    BatchResult result = run_batch(load_batch_manifest(manifest_path));
    *batch_json_out = dup_string(batch_to_json(result).dump(2));
  });
}

}  // extern "C"
