#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evident {

enum class ArchiveFormat { tar_gz, tar_xz, tar_bz2, zip };
const char* archive_format_name(ArchiveFormat f);

struct MemberRecord {
  std::string path;    // '/'-separated, relative; directories end with '/'
  std::string sha256;  // empty for directories
  std::uint32_t mode = 0644;
  bool is_dir = false;
  std::uint64_t size = 0;

  bool operator==(const MemberRecord&) const = default;
};

// Round-trip editing surface over one source archive: unpack into a
// scratch directory, edit members, repack into the original format.
// Identity is defined at the manifest level (path, content hash, mode),
// not compressed-byte level.
class ArchiveHandle {
 public:
  // Scratch location: <workspace_root>/.evident-scratch/<archive-name>/.
  // Corrupted input raises broken_archive; unknown formats raise
  // unsupported_format.
  static ArchiveHandle unpack(const std::string& archive_path,
                              const std::string& workspace_root);

  const std::string& original_path() const { return original_path_; }
  ArchiveFormat format() const { return format_; }
  const std::string& scratch_dir() const { return scratch_dir_; }
  const std::vector<MemberRecord>& manifest() const { return manifest_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool dirty() const { return dirty_; }

  bool contains(const std::string& member_path) const;
  std::string read_member(const std::string& member_path) const;
  void edit_member(const std::string& member_path, const std::string& content,
                   bool create = false);
  void remove_member(const std::string& member_path);

  // Rewrites original_path in the original format from the manifest;
  // clears dirty.
  void repack();

 private:
  std::string original_path_;
  ArchiveFormat format_ = ArchiveFormat::tar_gz;
  std::string scratch_dir_;
  std::vector<MemberRecord> manifest_;
  std::vector<std::string> warnings_;
  bool dirty_ = false;

  MemberRecord* find(const std::string& member_path);
  const MemberRecord* find(const std::string& member_path) const;
};

// Magic-byte detection with extension fallback; raises unsupported_format
// for formats outside the supported set (e.g. .7z) and broken_archive when
// a known extension's bytes don't match any known magic.
ArchiveFormat detect_format(const std::string& archive_path);

// Builds an archive from a directory tree (fixture construction and the
// repack path share the writers underneath).
void pack_directory(const std::string& dir_path, const std::string& archive_path,
                    ArchiveFormat format);

// Compression codecs, exposed for focused tests.
std::string gzip_compress(const std::string& data);
std::string gzip_decompress(const std::string& data);
std::string xz_compress(const std::string& data);
std::string xz_decompress(const std::string& data);
std::string bzip2_compress(const std::string& data);
std::string bzip2_decompress(const std::string& data);

}  // namespace evident
