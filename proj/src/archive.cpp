#include "evident/archive.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <system_error>

#include <lzma.h>
#include <zlib.h>

#include "evident/errors.hpp"
#include "evident/util.hpp"

// bzlib.h is not shipped in this environment; only the runtime library is.
// These are the two stable one-shot entry points from the libbz2 ABI.
extern "C" {
int BZ2_bzBuffToBuffCompress(char* dest, unsigned* destLen, char* source, unsigned sourceLen,
                             int blockSize100k, int verbosity, int workFactor);
int BZ2_bzBuffToBuffDecompress(char* dest, unsigned* destLen, char* source, unsigned sourceLen,
                               int small, int verbosity);
}

namespace fs = std::filesystem;

namespace evident {

const char* archive_format_name(ArchiveFormat f) {
  switch (f) {
    case ArchiveFormat::tar_gz: return "tar.gz";
    case ArchiveFormat::tar_xz: return "tar.xz";
    case ArchiveFormat::tar_bz2: return "tar.bz2";
    case ArchiveFormat::zip: return "zip";
  }
  return "tar.gz";
}

// ---------------------------------------------------------------- codecs

std::string gzip_compress(const std::string& data) {
  z_stream s{};
  if (deflateInit2(&s, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    raise(ErrorCode::io_error, "deflateInit2 failed");
  std::string out;
  out.resize(deflateBound(&s, static_cast<uLong>(data.size())) + 32);
  s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  s.avail_in = static_cast<uInt>(data.size());
  s.next_out = reinterpret_cast<Bytef*>(out.data());
  s.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&s, Z_FINISH);
  deflateEnd(&s);
  if (rc != Z_STREAM_END) raise(ErrorCode::io_error, "gzip compression failed");
  out.resize(out.size() - s.avail_out);
  return out;
}

std::string gzip_decompress(const std::string& data) {
  z_stream s{};
  if (inflateInit2(&s, 15 + 32) != Z_OK)  // auto-detect gzip/zlib wrapper
    raise(ErrorCode::io_error, "inflateInit2 failed");
  std::string out;
  out.resize(std::max<size_t>(data.size() * 4, 64 * 1024));
  s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  s.avail_in = static_cast<uInt>(data.size());
  size_t written = 0;
  int rc = Z_OK;
  while (true) {
    s.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    s.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&s, Z_NO_FLUSH);
    written = out.size() - s.avail_out;
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK || rc == Z_BUF_ERROR) {
      if (s.avail_in == 0 && rc == Z_BUF_ERROR) break;  // truncated stream
      if (s.avail_out == 0) {
        out.resize(out.size() * 2);
        continue;
      }
      if (s.avail_in == 0) break;  // ran dry without end marker
      continue;
    }
    break;  // data error
  }
  inflateEnd(&s);
  if (rc != Z_STREAM_END)
    raise(ErrorCode::broken_archive, "corrupted or truncated gzip stream");
  out.resize(written);
  return out;
}

std::string xz_compress(const std::string& data) {
  lzma_stream s = LZMA_STREAM_INIT;
  if (lzma_easy_encoder(&s, 6, LZMA_CHECK_CRC64) != LZMA_OK)
    raise(ErrorCode::io_error, "lzma encoder init failed");
  std::string out;
  out.resize(data.size() + data.size() / 3 + 256);
  s.next_in = reinterpret_cast<const uint8_t*>(data.data());
  s.avail_in = data.size();
  size_t written = 0;
  lzma_ret rc = LZMA_OK;
  while (true) {
    s.next_out = reinterpret_cast<uint8_t*>(out.data() + written);
    s.avail_out = out.size() - written;
    rc = lzma_code(&s, LZMA_FINISH);
    written = out.size() - s.avail_out;
    if (rc == LZMA_STREAM_END) break;
    if (rc != LZMA_OK) break;
    if (s.avail_out == 0) out.resize(out.size() * 2);
  }
  lzma_end(&s);
  if (rc != LZMA_STREAM_END) raise(ErrorCode::io_error, "xz compression failed");
  out.resize(written);
  return out;
}

std::string xz_decompress(const std::string& data) {
  lzma_stream s = LZMA_STREAM_INIT;
  if (lzma_stream_decoder(&s, UINT64_MAX, 0) != LZMA_OK)
    raise(ErrorCode::io_error, "lzma decoder init failed");
  std::string out;
  out.resize(std::max<size_t>(data.size() * 4, 64 * 1024));
  s.next_in = reinterpret_cast<const uint8_t*>(data.data());
  s.avail_in = data.size();
  size_t written = 0;
  lzma_ret rc = LZMA_OK;
  while (true) {
    s.next_out = reinterpret_cast<uint8_t*>(out.data() + written);
    s.avail_out = out.size() - written;
    rc = lzma_code(&s, LZMA_FINISH);
    written = out.size() - s.avail_out;
    if (rc == LZMA_STREAM_END) break;
    if (rc == LZMA_OK || rc == LZMA_BUF_ERROR) {
      if (s.avail_out == 0) {
        out.resize(out.size() * 2);
        continue;
      }
      break;  // input exhausted without stream end
    }
    break;
  }
  lzma_end(&s);
  if (rc != LZMA_STREAM_END)
    raise(ErrorCode::broken_archive, "corrupted or truncated xz stream");
  out.resize(written);
  return out;
}

std::string bzip2_compress(const std::string& data) {
  unsigned cap = static_cast<unsigned>(data.size() + data.size() / 100 + 600);
  std::string out;
  out.resize(cap);
  int rc = BZ2_bzBuffToBuffCompress(out.data(), &cap, const_cast<char*>(data.data()),
                                    static_cast<unsigned>(data.size()), 9, 0, 0);
  if (rc != 0) raise(ErrorCode::io_error, "bzip2 compression failed");
  out.resize(cap);
  return out;
}

std::string bzip2_decompress(const std::string& data) {
  constexpr int kOutBuffFull = -8;
  unsigned cap = static_cast<unsigned>(std::max<size_t>(data.size() * 8, 64 * 1024));
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::string out;
    out.resize(cap);
    unsigned len = cap;
    int rc = BZ2_bzBuffToBuffDecompress(out.data(), &len, const_cast<char*>(data.data()),
                                        static_cast<unsigned>(data.size()), 0, 0);
    if (rc == 0) {
      out.resize(len);
      return out;
    }
    if (rc == kOutBuffFull) {
      cap *= 2;
      continue;
    }
    raise(ErrorCode::broken_archive, "corrupted or truncated bzip2 stream");
  }
  raise(ErrorCode::broken_archive, "bzip2 stream exceeds size limits");
}

// ------------------------------------------------------------------- tar

namespace {

struct RawMember {
  std::string path;
  std::string content;
  std::uint32_t mode = 0644;
  bool is_dir = false;
};

void check_member_path(const std::string& path) {
  if (path.empty() || path[0] == '/')
    raise(ErrorCode::broken_archive, "unsafe member path: " + path);
  std::string part;
  for (size_t i = 0; i <= path.size(); ++i) {
    if (i == path.size() || path[i] == '/') {
      if (part == "..") raise(ErrorCode::broken_archive, "unsafe member path: " + path);
      part.clear();
    } else {
      part.push_back(path[i]);
    }
  }
}

std::string octal_field(std::uint64_t value, size_t width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
  return std::string(buf) + '\0';
}

std::uint64_t parse_octal(const char* p, size_t n) {
  std::uint64_t v = 0;
  for (size_t i = 0; i < n && p[i]; ++i) {
    if (p[i] == ' ') continue;
    if (p[i] < '0' || p[i] > '7')
      raise(ErrorCode::broken_archive, "bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(p[i] - '0');
  }
  return v;
}

std::string tar_header(const RawMember& m) {
  std::string h(512, '\0');
  std::string name = m.path;
  std::string prefix;
  if (name.size() > 100) {
    // split at a '/' so that name fits 100 bytes and prefix fits 155
    size_t best = std::string::npos;
    for (size_t i = 0; i < name.size(); ++i)
      if (name[i] == '/' && name.size() - i - 1 <= 100 && i <= 155) best = i;
    if (best == std::string::npos)
      raise(ErrorCode::io_error, "member path too long for ustar: " + m.path);
    prefix = name.substr(0, best);
    name = name.substr(best + 1);
  }
  std::memcpy(h.data(), name.data(), name.size());
  std::memcpy(h.data() + 100, octal_field(m.mode & 07777, 8).data(), 8);
  std::memcpy(h.data() + 108, octal_field(0, 8).data(), 8);   // uid
  std::memcpy(h.data() + 116, octal_field(0, 8).data(), 8);   // gid
  std::memcpy(h.data() + 124, octal_field(m.is_dir ? 0 : m.content.size(), 12).data(), 12);
  std::memcpy(h.data() + 136, octal_field(0, 12).data(), 12);  // mtime: fixed for determinism
  std::memset(h.data() + 148, ' ', 8);                          // chksum placeholder
  h[156] = m.is_dir ? '5' : '0';
  std::memcpy(h.data() + 257, "ustar", 6);
  h[263] = '0';
  h[264] = '0';
  std::memcpy(h.data() + 345, prefix.data(), prefix.size());
  unsigned sum = 0;
  for (unsigned char c : h) sum += c;
  char chk[8];
  std::snprintf(chk, sizeof chk, "%06o", sum);
  std::memcpy(h.data() + 148, chk, 6);
  h[154] = '\0';
  h[155] = ' ';
  return h;
}

std::string tar_create(const std::vector<RawMember>& members) {
  std::string out;
  for (const auto& m : members) {
    out += tar_header(m);
    if (!m.is_dir) {
      out += m.content;
      size_t pad = (512 - m.content.size() % 512) % 512;
      out.append(pad, '\0');
    }
  }
  out.append(1024, '\0');  // two terminating zero blocks
  return out;
}

std::vector<RawMember> tar_parse(const std::string& data, std::vector<std::string>* warnings) {
  std::vector<RawMember> members;
  size_t off = 0;
  bool saw_terminator = false;
  std::string pending_longname;
  while (off + 512 <= data.size()) {
    const char* h = data.data() + off;
    bool all_zero = true;
    for (int i = 0; i < 512; ++i)
      if (h[i] != '\0') {
        all_zero = false;
        break;
      }
    if (all_zero) {
      saw_terminator = true;
      break;
    }

    if (std::memcmp(h + 257, "ustar", 5) != 0)
      raise(ErrorCode::broken_archive, "not a ustar header");
    std::uint64_t stored_sum = parse_octal(h + 148, 8);
    unsigned sum = 0;
    for (int i = 0; i < 512; ++i) sum += static_cast<unsigned char>(i >= 148 && i < 156 ? ' ' : h[i]);
    if (sum != stored_sum) raise(ErrorCode::broken_archive, "tar header checksum mismatch");

    std::uint64_t size = parse_octal(h + 124, 12);
    char type = h[156];
    std::string name(h, strnlen(h, 100));
    std::string prefix(h + 345, strnlen(h + 345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;
    if (!pending_longname.empty()) {
      name = pending_longname;
      pending_longname.clear();
    }

    size_t data_off = off + 512;
    size_t padded = (size + 511) / 512 * 512;
    if (data_off + padded > data.size())
      raise(ErrorCode::broken_archive, "truncated tar member: " + name);

    if (type == 'L') {  // GNU long name for the next entry
      pending_longname = std::string(data.data() + data_off, size);
      while (!pending_longname.empty() && pending_longname.back() == '\0')
        pending_longname.pop_back();
    } else if (type == 'x' || type == 'g') {
      // pax extended headers carry attributes we don't track
    } else if (type == '0' || type == '\0' || type == '5') {
      RawMember m;
      m.is_dir = type == '5';
      if (m.is_dir && (name.empty() || name.back() != '/')) name += '/';
      m.path = name;
      m.mode = static_cast<std::uint32_t>(parse_octal(h + 100, 8)) & 07777;
      if (!m.is_dir) m.content = std::string(data.data() + data_off, size);
      check_member_path(m.is_dir ? name.substr(0, name.size() - 1) : name);
      members.push_back(std::move(m));
    } else if (warnings) {
      warnings->push_back("skipped unsupported tar member type '" + std::string(1, type) +
                          "': " + name);
    }
    off = data_off + padded;
  }
  if (!saw_terminator) {
    // No zero terminator: tolerate ending exactly at a block boundary (or
    // zero-padded), but partial non-zero trailing bytes mean a mangled body.
    for (size_t i = off; i < data.size(); ++i)
      if (data[i] != '\0')
        raise(ErrorCode::broken_archive, "tar stream is not block-aligned");
  }
  return members;
}

// ------------------------------------------------------------------- zip

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::string deflate_raw(const std::string& data) {
  z_stream s{};
  if (deflateInit2(&s, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    raise(ErrorCode::io_error, "deflateInit2 failed");
  std::string out;
  out.resize(deflateBound(&s, static_cast<uLong>(data.size())) + 32);
  s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  s.avail_in = static_cast<uInt>(data.size());
  s.next_out = reinterpret_cast<Bytef*>(out.data());
  s.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&s, Z_FINISH);
  deflateEnd(&s);
  if (rc != Z_STREAM_END) raise(ErrorCode::io_error, "raw deflate failed");
  out.resize(out.size() - s.avail_out);
  return out;
}

std::string inflate_raw(const std::string& data, std::uint64_t expected_size) {
  z_stream s{};
  if (inflateInit2(&s, -15) != Z_OK) raise(ErrorCode::io_error, "inflateInit2 failed");
  std::string out;
  out.resize(std::max<std::uint64_t>(expected_size, 64));
  s.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  s.avail_in = static_cast<uInt>(data.size());
  size_t written = 0;
  int rc = Z_OK;
  while (true) {
    s.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    s.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&s, Z_NO_FLUSH);
    written = out.size() - s.avail_out;
    if (rc == Z_STREAM_END) break;
    if ((rc == Z_OK || rc == Z_BUF_ERROR) && s.avail_out == 0) {
      out.resize(out.size() * 2);
      continue;
    }
    break;
  }
  inflateEnd(&s);
  if (rc != Z_STREAM_END)
    raise(ErrorCode::broken_archive, "corrupted zip member data");
  out.resize(written);
  return out;
}

std::string zip_create(const std::vector<RawMember>& members) {
  std::string out;
  struct CentralRecord {
    std::string name;
    std::uint16_t method;
    std::uint32_t crc, csize, usize, offset;
    std::uint32_t external;
  };
  std::vector<CentralRecord> central;

  for (const auto& m : members) {
    std::string name = m.path;
    if (m.is_dir && (name.empty() || name.back() != '/')) name += '/';
    std::string compressed;
    std::uint16_t method = 0;
    std::uint32_t crc = 0;
    if (!m.is_dir && !m.content.empty()) {
      compressed = deflate_raw(m.content);
      method = 8;
      crc = static_cast<std::uint32_t>(
          crc32(0, reinterpret_cast<const Bytef*>(m.content.data()),
                static_cast<uInt>(m.content.size())));
      if (compressed.size() >= m.content.size()) {  // store when deflate doesn't help
        compressed = m.content;
        method = 0;
      }
    }
    CentralRecord rec;
    rec.name = name;
    rec.method = method;
    rec.crc = crc;
    rec.csize = static_cast<std::uint32_t>(compressed.size());
    rec.usize = static_cast<std::uint32_t>(m.is_dir ? 0 : m.content.size());
    rec.offset = static_cast<std::uint32_t>(out.size());
    rec.external = ((m.mode & 07777) | (m.is_dir ? 040000u : 0100000u)) << 16;
    if (m.is_dir) rec.external |= 0x10;  // DOS directory bit
    central.push_back(rec);

    out += "PK\x03\x04";
    put_u16(out, 20);          // version needed
    put_u16(out, 0);           // flags
    put_u16(out, method);
    put_u16(out, 0);           // mod time (fixed for determinism)
    put_u16(out, 0x21);        // mod date: 1980-01-01
    put_u32(out, rec.crc);
    put_u32(out, rec.csize);
    put_u32(out, rec.usize);
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    put_u16(out, 0);           // extra length
    out += name;
    out += compressed;
  }

  std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
  for (const auto& rec : central) {
    out += "PK\x01\x02";
    put_u16(out, (3 << 8) | 20);  // made by: Unix
    put_u16(out, 20);
    put_u16(out, 0);
    put_u16(out, rec.method);
    put_u16(out, 0);
    put_u16(out, 0x21);
    put_u32(out, rec.crc);
    put_u32(out, rec.csize);
    put_u32(out, rec.usize);
    put_u16(out, static_cast<std::uint16_t>(rec.name.size()));
    put_u16(out, 0);  // extra
    put_u16(out, 0);  // comment
    put_u16(out, 0);  // disk
    put_u16(out, 0);  // internal attrs
    put_u32(out, rec.external);
    put_u32(out, rec.offset);
    out += rec.name;
  }
  std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;

  out += "PK\x05\x06";
  put_u16(out, 0);
  put_u16(out, 0);
  put_u16(out, static_cast<std::uint16_t>(central.size()));
  put_u16(out, static_cast<std::uint16_t>(central.size()));
  put_u32(out, cd_size);
  put_u32(out, cd_offset);
  put_u16(out, 0);  // comment length
  return out;
}

std::vector<RawMember> zip_parse(const std::string& data) {
  if (data.size() < 22) raise(ErrorCode::broken_archive, "zip too small");
  // find end-of-central-directory from the back
  size_t eocd = std::string::npos;
  size_t scan_start = data.size() >= 66000 ? data.size() - 66000 : 0;
  for (size_t i = data.size() - 22 + 1; i-- > scan_start;) {
    if (std::memcmp(data.data() + i, "PK\x05\x06", 4) == 0) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos)
    raise(ErrorCode::broken_archive, "zip end-of-central-directory not found");

  std::uint16_t count = get_u16(data.data() + eocd + 10);
  std::uint32_t cd_size = get_u32(data.data() + eocd + 12);
  std::uint32_t cd_offset = get_u32(data.data() + eocd + 16);
  if (cd_offset + cd_size > data.size())
    raise(ErrorCode::broken_archive, "zip central directory out of bounds");

  std::vector<RawMember> members;
  size_t p = cd_offset;
  for (int i = 0; i < count; ++i) {
    if (p + 46 > data.size() || std::memcmp(data.data() + p, "PK\x01\x02", 4) != 0)
      raise(ErrorCode::broken_archive, "bad zip central directory entry");
    std::uint16_t method = get_u16(data.data() + p + 10);
    std::uint32_t crc = get_u32(data.data() + p + 16);
    std::uint32_t csize = get_u32(data.data() + p + 20);
    std::uint32_t usize = get_u32(data.data() + p + 24);
    std::uint16_t name_len = get_u16(data.data() + p + 28);
    std::uint16_t extra_len = get_u16(data.data() + p + 30);
    std::uint16_t comment_len = get_u16(data.data() + p + 32);
    std::uint32_t external = get_u32(data.data() + p + 38);
    std::uint32_t local_off = get_u32(data.data() + p + 42);
    if (p + 46 + name_len > data.size())
      raise(ErrorCode::broken_archive, "bad zip name field");
    std::string name(data.data() + p + 46, name_len);
    p += 46 + name_len + extra_len + comment_len;

    RawMember m;
    m.is_dir = !name.empty() && name.back() == '/';
    m.path = name;
    std::uint32_t unix_mode = (external >> 16) & 07777;
    m.mode = unix_mode ? unix_mode : (m.is_dir ? 0755 : 0644);

    if (!m.is_dir) {
      if (local_off + 30 > data.size() ||
          std::memcmp(data.data() + local_off, "PK\x03\x04", 4) != 0)
        raise(ErrorCode::broken_archive, "bad zip local header: " + name);
      std::uint16_t lname = get_u16(data.data() + local_off + 26);
      std::uint16_t lextra = get_u16(data.data() + local_off + 28);
      size_t doff = local_off + 30 + lname + lextra;
      if (doff + csize > data.size())
        raise(ErrorCode::broken_archive, "truncated zip member: " + name);
      std::string raw(data.data() + doff, csize);
      if (method == 0)
        m.content = raw;
      else if (method == 8)
        m.content = inflate_raw(raw, usize);
      else
        raise(ErrorCode::broken_archive, "unsupported zip compression method");
      std::uint32_t actual = static_cast<std::uint32_t>(
          crc32(0, reinterpret_cast<const Bytef*>(m.content.data()),
                static_cast<uInt>(m.content.size())));
      if (actual != crc) raise(ErrorCode::broken_archive, "zip crc mismatch: " + name);
    }
    check_member_path(m.is_dir ? name.substr(0, name.size() - 1) : name);
    members.push_back(std::move(m));
  }
  return members;
}

}  // namespace

// ------------------------------------------------------------- detection

ArchiveFormat detect_format(const std::string& archive_path) {
  std::string head;
  try {
    head = read_file_bytes(archive_path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::not_found) throw;
    raise(ErrorCode::broken_archive, "unreadable archive: " + archive_path);
  }
  auto magic = [&](std::initializer_list<unsigned char> bytes) {
    if (head.size() < bytes.size()) return false;
    size_t i = 0;
    for (unsigned char b : bytes)
      if (static_cast<unsigned char>(head[i++]) != b) return false;
    return true;
  };
  if (magic({0x1f, 0x8b})) return ArchiveFormat::tar_gz;
  if (magic({0xfd, '7', 'z', 'X', 'Z', 0x00})) return ArchiveFormat::tar_xz;
  if (magic({'B', 'Z', 'h'})) return ArchiveFormat::tar_bz2;
  if (magic({'P', 'K', 0x03, 0x04}) || magic({'P', 'K', 0x05, 0x06}))
    return ArchiveFormat::zip;
  if (magic({'7', 'z', 0xbc, 0xaf, 0x27, 0x1c}))
    raise(ErrorCode::unsupported_format, "7z archives are not supported");

  // no recognizable magic: a claimed-but-corrupt known format vs. something
  // we never handle
  std::string lower = to_lower(archive_path);
  static const char* known[] = {".tar.gz", ".tgz", ".tar.xz", ".txz",
                                ".tar.bz2", ".tbz2", ".zip"};
  for (const char* ext : known) {
    std::string e = ext;
    if (lower.size() >= e.size() && lower.compare(lower.size() - e.size(), e.size(), e) == 0)
      raise(ErrorCode::broken_archive, "archive bytes do not match its format: " + archive_path);
  }
  raise(ErrorCode::unsupported_format, "unrecognized archive format: " + archive_path);
}

// ---------------------------------------------------------------- handle

namespace {

std::string decompress_for(ArchiveFormat f, const std::string& bytes) {
  switch (f) {
    case ArchiveFormat::tar_gz: return gzip_decompress(bytes);
    case ArchiveFormat::tar_xz: return xz_decompress(bytes);
    case ArchiveFormat::tar_bz2: return bzip2_decompress(bytes);
    case ArchiveFormat::zip: return bytes;
  }
  return bytes;
}

std::string compress_for(ArchiveFormat f, const std::string& bytes) {
  switch (f) {
    case ArchiveFormat::tar_gz: return gzip_compress(bytes);
    case ArchiveFormat::tar_xz: return xz_compress(bytes);
    case ArchiveFormat::tar_bz2: return bzip2_compress(bytes);
    case ArchiveFormat::zip: return bytes;
  }
  return bytes;
}

std::vector<RawMember> parse_members(ArchiveFormat f, const std::string& bytes,
                                     std::vector<std::string>* warnings) {
  if (f == ArchiveFormat::zip) return zip_parse(bytes);
  return tar_parse(decompress_for(f, bytes), warnings);
}

std::string serialize_members(ArchiveFormat f, const std::vector<RawMember>& members) {
  if (f == ArchiveFormat::zip) return zip_create(members);
  return compress_for(f, tar_create(members));
}

MemberRecord record_of(const RawMember& m) {
  MemberRecord r;
  r.path = m.path;
  r.mode = m.mode;
  r.is_dir = m.is_dir;
  if (!m.is_dir) {
    r.sha256 = sha256_hex(m.content);
    r.size = m.content.size();
  }
  return r;
}

}  // namespace

ArchiveHandle ArchiveHandle::unpack(const std::string& archive_path,
                                    const std::string& workspace_root) {
  ArchiveHandle h;
  h.original_path_ = archive_path;
  h.format_ = detect_format(archive_path);

  std::string bytes = read_file_bytes(archive_path);
  std::vector<RawMember> members = parse_members(h.format_, bytes, &h.warnings_);

  fs::path scratch = fs::path(workspace_root) / ".evident-scratch" /
                     fs::path(archive_path).filename();
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch, ec);
  if (ec) raise(ErrorCode::io_error, "cannot create scratch dir: " + scratch.string());
  h.scratch_dir_ = scratch.string();

  for (const auto& m : members) {
    fs::path target = scratch / m.path;
    if (m.is_dir) {
      fs::create_directories(target, ec);
      if (!ec) fs::permissions(target, static_cast<fs::perms>(m.mode & 07777), ec);
    } else {
      fs::create_directories(target.parent_path(), ec);
      write_file_atomic(target.string(), m.content);
      fs::permissions(target, static_cast<fs::perms>(m.mode & 07777), ec);
    }
    h.manifest_.push_back(record_of(m));
  }
  std::sort(h.manifest_.begin(), h.manifest_.end(),
            [](const MemberRecord& a, const MemberRecord& b) { return a.path < b.path; });
  h.dirty_ = false;
  return h;
}

MemberRecord* ArchiveHandle::find(const std::string& member_path) {
  for (auto& r : manifest_)
    if (r.path == member_path) return &r;
  return nullptr;
}

const MemberRecord* ArchiveHandle::find(const std::string& member_path) const {
  for (const auto& r : manifest_)
    if (r.path == member_path) return &r;
  return nullptr;
}

bool ArchiveHandle::contains(const std::string& member_path) const {
  return find(member_path) != nullptr;
}

std::string ArchiveHandle::read_member(const std::string& member_path) const {
  const MemberRecord* r = find(member_path);
  if (!r || r->is_dir)
    raise(ErrorCode::missing_member, "no such archive member: " + member_path);
  return read_file_bytes((fs::path(scratch_dir_) / member_path).string());
}

void ArchiveHandle::edit_member(const std::string& member_path, const std::string& content,
                                bool create) {
  check_member_path(member_path);
  MemberRecord* r = find(member_path);
  if (!r && !create)
    raise(ErrorCode::missing_member, "no such archive member: " + member_path);

  fs::path target = fs::path(scratch_dir_) / member_path;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  write_file_atomic(target.string(), content);

  if (r) {
    r->sha256 = sha256_hex(content);
    r->size = content.size();
  } else {
    MemberRecord rec;
    rec.path = member_path;
    rec.sha256 = sha256_hex(content);
    rec.mode = 0644;
    rec.size = content.size();
    fs::permissions(target, static_cast<fs::perms>(0644), ec);
    manifest_.push_back(rec);
    std::sort(manifest_.begin(), manifest_.end(),
              [](const MemberRecord& a, const MemberRecord& b) { return a.path < b.path; });
  }
  dirty_ = true;
}

void ArchiveHandle::remove_member(const std::string& member_path) {
  auto it = std::find_if(manifest_.begin(), manifest_.end(),
                         [&](const MemberRecord& r) { return r.path == member_path; });
  if (it == manifest_.end())
    raise(ErrorCode::missing_member, "no such archive member: " + member_path);
  std::error_code ec;
  fs::remove(fs::path(scratch_dir_) / member_path, ec);
  manifest_.erase(it);
  dirty_ = true;
}

void ArchiveHandle::repack() {
  std::error_code ec;
  if (!fs::exists(scratch_dir_, ec) || ec)
    raise(ErrorCode::io_error, "scratch directory vanished: " + scratch_dir_);

  std::vector<RawMember> members;
  for (const auto& r : manifest_) {
    RawMember m;
    m.path = r.path;
    m.mode = r.mode;
    m.is_dir = r.is_dir;
    if (!r.is_dir) {
      std::string rel = r.path;
      m.content = read_file_bytes((fs::path(scratch_dir_) / rel).string());
    }
    members.push_back(std::move(m));
  }
  write_file_atomic(original_path_, serialize_members(format_, members));
  dirty_ = false;
}

void pack_directory(const std::string& dir_path, const std::string& archive_path,
                    ArchiveFormat format) {
  fs::path root(dir_path);
  std::error_code ec;
  if (!fs::is_directory(root, ec) || ec)
    raise(ErrorCode::not_found, "no such directory: " + dir_path);

  std::vector<RawMember> members;
  std::vector<fs::path> paths;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
       ++it)
    paths.push_back(it->path());
  std::sort(paths.begin(), paths.end());

  for (const auto& p : paths) {
    RawMember m;
    std::string rel = fs::relative(p, root).generic_string();
    auto status = fs::status(p);
    m.mode = static_cast<std::uint32_t>(status.permissions()) & 07777;
    if (fs::is_directory(status)) {
      m.is_dir = true;
      m.path = rel + "/";
    } else {
      m.path = rel;
      m.content = read_file_bytes(p.string());
    }
    members.push_back(std::move(m));
  }
  write_file_atomic(archive_path, serialize_members(format, members));
}

}  // namespace evident
