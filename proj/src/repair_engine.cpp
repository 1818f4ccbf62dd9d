#include "evident/repair_engine.hpp"

#include <algorithm>
#include <filesystem>

#include "evident/diff.hpp"
#include "evident/errors.hpp"
#include "evident/util.hpp"
#include "evident/workspace_inspector.hpp"

namespace fs = std::filesystem;

namespace evident {

RepairEngine::RepairEngine(std::string workspace_root) : root_(std::move(workspace_root)) {
  std::error_code ec;
  if (!fs::is_directory(root_, ec) || ec)
    raise(ErrorCode::not_found, "workspace does not exist: " + root_);
}

void RepairEngine::attach_archive(ArchiveHandle* handle) {
  if (handle) archives_.push_back(handle);
}

std::string RepairEngine::resolve(const std::string& rel_path) const {
  fs::path p(rel_path);
  if (p.is_absolute())
    raise(ErrorCode::path_escape, "absolute target path: " + rel_path);
  fs::path normal = p.lexically_normal();
  if (normal.empty() || *normal.begin() == "..")
    raise(ErrorCode::path_escape, "target escapes the workspace: " + rel_path);
  return (fs::path(root_) / normal).string();
}

void RepairEngine::store_diff(int iteration, int sequence, const std::string& full_diff) {
  fs::path dir = fs::path(root_) / ".evident-history";
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::string name = "iter" + std::to_string(iteration) + "-seq" + std::to_string(sequence) + ".diff";
  write_file_atomic((dir / name).string(), full_diff);
}

HistoryEntry RepairEngine::apply(const RepairAction& action, int iteration, int sequence) {
  if (action.kind == RepairKind::archive_repackage)
    return apply_repackage(action, iteration, sequence);
  return apply_file_edit(action, iteration, sequence);
}

HistoryEntry RepairEngine::apply_repackage(const RepairAction& action, int iteration,
                                           int sequence) {
  std::string abs = resolve(action.target_path);
  ArchiveHandle* handle = nullptr;
  for (ArchiveHandle* h : archives_) {
    std::error_code ec;
    if (fs::weakly_canonical(h->original_path(), ec) == fs::weakly_canonical(abs, ec)) {
      handle = h;
      break;
    }
  }
  if (!handle)
    raise(ErrorCode::precondition, "no unpacked archive for " + action.target_path);
  handle->repack();

  HistoryEntry e;
  e.iteration = iteration;
  e.sequence = sequence;
  e.action_kind = RepairKind::archive_repackage;
  e.target_path = action.target_path;
  e.diff_summary = "repacked " + action.target_path + " (" +
                   std::to_string(handle->manifest().size()) + " members, " +
                   archive_format_name(handle->format()) + ")";
  store_diff(iteration, sequence, e.diff_summary + "\n");
  return e;
}

HistoryEntry RepairEngine::apply_file_edit(const RepairAction& action, int iteration,
                                           int sequence) {
  const std::string abs = resolve(action.target_path);
  const std::string scratch_prefix = ".evident-scratch/";
  fs::path normal = fs::path(action.target_path).lexically_normal();
  std::string rel = normal.generic_string();

  // a target under an unpacked archive goes through the handle so the
  // member manifest tracks the change
  ArchiveHandle* handle = nullptr;
  std::string member_path;
  if (starts_with(rel, scratch_prefix)) {
    for (ArchiveHandle* h : archives_) {
      fs::path scratch_rel = fs::relative(h->scratch_dir(), root_);
      std::string prefix = scratch_rel.generic_string() + "/";
      if (starts_with(rel, prefix)) {
        handle = h;
        member_path = rel.substr(prefix.size());
        break;
      }
    }
    if (!handle)
      raise(ErrorCode::precondition,
            "target is under a scratch area with no attached archive: " + rel);
  }

  const bool exists = handle ? handle->contains(member_path) : fs::exists(abs);
  std::string before;
  if (exists) before = handle ? handle->read_member(member_path) : read_file_bytes(abs);

  if (action.tombstone) {
    if (!exists) raise(ErrorCode::not_found, "cannot delete absent target: " + rel);
  } else if (!exists && !action.create) {
    raise(handle ? ErrorCode::missing_member : ErrorCode::not_found,
          "target does not exist (pass create to add it): " + rel);
  }

  if (action.kind == RepairKind::source_modification && exists && !action.tombstone) {
    const bool target_binary = before.find('\0') != std::string::npos;
    const bool content_text = action.new_content.find('\0') == std::string::npos;
    if (target_binary && content_text)
      raise(ErrorCode::encoding_mismatch,
            "binary target cannot take a text replacement: " + rel);
  }
  if (action.kind == RepairKind::config_adaptation) {
    EntryKind kind = infer_kind(fs::path(rel).filename().string());
    if (kind != EntryKind::recipe && kind != EntryKind::script)
      warnings_.push_back("config adaptation on a non-recipe/script target: " + rel);
  }

  HistoryEntry e;
  e.iteration = iteration;
  e.sequence = sequence;
  e.action_kind = action.kind;
  e.target_path = rel;

  if (!action.tombstone && exists && before == action.new_content) {
    warnings_.push_back("no content change for " + rel);
    store_diff(iteration, sequence, "");
    return e;  // empty diff_summary by contract
  }

  std::string full_diff;
  if (action.tombstone)
    full_diff = unified_diff(before, "", "a/" + rel, "/dev/null");
  else if (!exists)
    full_diff = unified_diff("", action.new_content, "/dev/null", "b/" + rel);
  else
    full_diff = unified_diff(before, action.new_content, "a/" + rel, "b/" + rel);

  if (handle) {
    if (action.tombstone)
      handle->remove_member(member_path);
    else
      handle->edit_member(member_path, action.new_content, action.create);
  } else if (action.tombstone) {
    std::error_code ec;
    if (!fs::remove(abs, ec) || ec)
      raise(ErrorCode::io_error, "failed to delete " + rel);
  } else {
    std::error_code ec;
    fs::create_directories(fs::path(abs).parent_path(), ec);
    write_file_atomic(abs, action.new_content);
  }

  store_diff(iteration, sequence, full_diff);
  e.diff_summary = truncate_diff(full_diff, 200);
  return e;
}

std::string RepairEngine::read_file(const std::string& rel_path) const {
  return read_file_bytes(resolve(rel_path));
}

}  // namespace evident
