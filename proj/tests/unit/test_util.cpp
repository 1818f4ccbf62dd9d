#include "doctest.h"
#include "evident/util.hpp"

#include <cstdio>
#include <filesystem>

using namespace evident;

TEST_SUITE("util") {

TEST_CASE("sha256 matches published vectors") {
  // FIPS 180-2 test vectors
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("split_lines handles trailing newline and empties") {
  CHECK(split_lines("") == std::vector<std::string>{});
  CHECK(split_lines("a") == std::vector<std::string>{"a"});
  CHECK(split_lines("a\n") == std::vector<std::string>{"a"});
  CHECK(split_lines("a\nb") == std::vector<std::string>{"a", "b"});
  CHECK(split_lines("a\n\nb\n") == std::vector<std::string>{"a", "", "b"});
  CHECK(split_lines("\n") == std::vector<std::string>{""});
}

TEST_CASE("join is the inverse of split for newline-terminated text") {
  for (const std::string text : {"one\ntwo\nthree\n", "x\n", "", "a\n\nb\n"}) {
    auto lines = split_lines(text);
    CHECK(join_lines(lines) == text);
  }
}

TEST_CASE("trim and case folding") {
  CHECK(trim("  x ") == "x");
  CHECK(trim("\t\r\n") == "");
  CHECK(trim("") == "");
  CHECK(to_lower("MiXeD-42") == "mixed-42");
  CHECK(contains_ci("Fatal ERROR here", "error"));
  CHECK_FALSE(contains_ci("ok", "error"));
  CHECK(starts_with("scripted:file", "scripted:"));
  CHECK_FALSE(starts_with("sim", "simulate"));
}

TEST_CASE("sanitize_utf8 preserves valid text, replaces junk bytes") {
  CHECK(sanitize_utf8("plain ascii") == "plain ascii");
  CHECK(sanitize_utf8("caf\xc3\xa9") == "caf\xc3\xa9");          // 2-byte seq
  CHECK(sanitize_utf8("\xe2\x9c\x93 done") == "\xe2\x9c\x93 done");  // 3-byte seq
  CHECK(sanitize_utf8("bad\xff" "byte") == "bad?byte");
  CHECK(sanitize_utf8("cut\xc3") == "cut?");  // truncated sequence
  CHECK(sanitize_utf8("\xc3\x28") == "?(");   // invalid continuation
}

TEST_CASE("glob_match star and question mark") {
  CHECK(glob_match("*.md", "README.md"));
  CHECK_FALSE(glob_match("*.md", "README.rst"));
  CHECK(glob_match("iter?.log", "iter3.log"));
  CHECK_FALSE(glob_match("iter?.log", "iter12.log"));
  CHECK(glob_match("*", "anything"));
  CHECK(glob_match("a*b*c", "aXbYc"));
  CHECK_FALSE(glob_match("a*b*c", "aXc"));
  CHECK(glob_match("", ""));
}

TEST_CASE("file round trip and atomic write") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "evident-util-test";
  fs::create_directories(dir);
  std::string path = (dir / "blob.bin").string();
  std::string payload = "line\n\x00\x01\xff binary";
  payload += '\0';
  write_file_atomic(path, payload);
  CHECK(read_file_bytes(path) == payload);
  fs::remove_all(dir);
}

TEST_CASE("format_fixed renders exact decimal places") {
  CHECK(format_fixed(66.6666, 2) == "66.67");
  CHECK(format_fixed(0.0, 2) == "0.00");
  CHECK(format_fixed(100.0, 2) == "100.00");
  CHECK(format_fixed(33.333, 2) == "33.33");
  CHECK(format_fixed(2.5, 0) == "2");  // round-half-even is fine; pin actual
}

}  // TEST_SUITE
