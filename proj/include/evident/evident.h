/* C interface to the evident build-repair library.
 *
 * Conventions:
 *   - Every fallible call returns an int status: 0 on success, otherwise one
 *     of the EVIDENT_E_* codes below.
 *   - When err_out is non-NULL and the call fails, *err_out receives a
 *     heap-allocated message the caller releases with evident_free().
 *   - String results (*_out) are heap-allocated, NUL-terminated, and owned
 *     by the caller; release them with evident_free(). Structured results
 *     are JSON documents in the library's versioned formats (signals.v1,
 *     recipe.v1, inventory.v1, report.v1, ...).
 *   - Opaque handles are closed with their matching *_close() function;
 *     closing NULL is a no-op.
 */
#ifndef EVIDENT_H
#define EVIDENT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  EVIDENT_OK = 0,
  EVIDENT_E_BOUNDARY = 1,
  EVIDENT_E_DUPLICATE = 2,
  EVIDENT_E_BUDGET = 3,
  EVIDENT_E_PRECONDITION = 4,
  EVIDENT_E_BROKEN_RECIPE = 5,
  EVIDENT_E_STRUCTURAL = 6,
  EVIDENT_E_BROKEN_ARCHIVE = 7,
  EVIDENT_E_UNSUPPORTED_FORMAT = 8,
  EVIDENT_E_MISSING_MEMBER = 9,
  EVIDENT_E_PATH_ESCAPE = 10,
  EVIDENT_E_ENCODING = 11,
  EVIDENT_E_IO = 12,
  EVIDENT_E_NOT_FOUND = 13,
  EVIDENT_E_INVALID_TOKEN = 14,
  EVIDENT_E_TRANSPORT = 15,
  EVIDENT_E_DRIVER_UNAVAILABLE = 16,
  EVIDENT_E_MALFORMED_TURN = 17,
  EVIDENT_E_CONFIG = 18,
  EVIDENT_E_INSPECTION = 19,
  EVIDENT_E_INTERNAL = 100 /* unexpected exception crossing the boundary */
};

const char* evident_version(void);
const char* evident_status_name(int status);
void evident_free(char* p);

/* ----- log distillation ------------------------------------------------ */

/* Condenses a raw build log into verified failure signals (signals.v1).
 * keyword_path may be NULL to use the built-in keyword set; window <= 0
 * selects the default context window. */
int evident_distill(const char* log_text, const char* keyword_path, int window,
                    char** signals_json_out, char** err_out);

/* Maps a signals.v1 document onto the failure taxonomy:
 * {"category": ..., "subcategory": ...}. */
int evident_classify(const char* signals_json, char** category_json_out, char** err_out);

/* ----- recipe analysis -------------------------------------------------- */

/* Parses RPM-style recipe text into recipe.v1 (structure, dependencies,
 * line attribution). The document is lossless: evident_render_recipe
 * reproduces the input byte for byte. */
int evident_parse_recipe(const char* recipe_text, char** recipe_json_out, char** err_out);
int evident_render_recipe(const char* recipe_json, char** text_out, char** err_out);

/* ----- workspace inventory ---------------------------------------------- */

/* Walks root and emits inventory.v1. prune_path may be NULL for the
 * default prune rules. */
int evident_inventory(const char* root, const char* prune_path, char** inventory_json_out,
                      char** err_out);

/* ----- archives ---------------------------------------------------------- */

typedef struct evident_archive evident_archive;

/* Unpacks archive_path into <workspace_root>/.evident-scratch/<name>/ and
 * returns a handle over the extracted tree. */
int evident_archive_unpack(const char* archive_path, const char* workspace_root,
                           evident_archive** handle_out, char** err_out);
/* Manifest as a JSON array of {path, sha256, mode}. */
int evident_archive_manifest(evident_archive* handle, char** manifest_json_out, char** err_out);
int evident_archive_read(evident_archive* handle, const char* member_path, char** content_out,
                         size_t* size_out, char** err_out);
int evident_archive_edit(evident_archive* handle, const char* member_path, const char* content,
                         size_t size, int create_if_missing, char** err_out);
int evident_archive_remove(evident_archive* handle, const char* member_path, char** err_out);
/* Rewrites the original archive, preserving its format. */
int evident_archive_repack(evident_archive* handle, char** err_out);
void evident_archive_close(evident_archive* handle);

/* ----- knowledge retrieval ----------------------------------------------- */

typedef struct evident_knowledge evident_knowledge;

/* Loads a knowledge.v1 corpus and builds the retrieval index. isa_filter
 * may be NULL/"" to index all entries, otherwise entries matching the ISA
 * (or tagged "any") are kept. */
int evident_knowledge_open(const char* corpus_path, const char* isa_filter,
                           evident_knowledge** handle_out, char** err_out);
/* Retrieves up to k entries for a signals.v1 document; hits_json_out is a
 * JSON array of {id, similarity, text}. k <= 0 and threshold < 0 select
 * the defaults (5, 0.15). */
int evident_knowledge_query(evident_knowledge* handle, const char* signals_json,
                            const char* isa_hint, int k, double threshold, char** hits_json_out,
                            char** err_out);
void evident_knowledge_close(evident_knowledge* handle);

/* ----- sessions ----------------------------------------------------------- */

/* Runs one repair session from a JSON run spec (workspace, log, script /
 * driver, session fixture / service, budget, ...). The result is a
 * report.v1 session document; repair failures are reported in the
 * document, not as a status code. outcome_code_out (nullable) receives
 * 0 = Success, 1 = Failed, 2 = BrokenUnsolvable. */
int evident_run_session(const char* run_spec_json, char** report_json_out, int* outcome_code_out,
                        char** err_out);

/* Runs every session in a batch.v1 manifest and returns the report.v1
 * batch document (summary + per-session reports). */
int evident_run_batch(const char* manifest_path, char** batch_json_out, char** err_out);

#ifdef __cplusplus
}
#endif

#endif /* EVIDENT_H */
