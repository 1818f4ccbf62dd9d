#include "doctest.h"
#include "evident/knowledge_base.hpp"
#include "evident/util.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace evident;

namespace {

// Dense brute-force TF-IDF scorer, written independently of the index:
// raw term frequency, idf = ln(N/df) + 1, L2 normalization, cosine.
struct DenseOracle {
  std::vector<std::string> ids;
  std::vector<std::map<std::string, double>> tf;
  std::map<std::string, int> df;
  size_t n = 0;

  explicit DenseOracle(const std::vector<KnowledgeEntry>& corpus) {
    n = corpus.size();
    for (const auto& e : corpus) {
      ids.push_back(e.id);
      std::map<std::string, double> counts;
      for (const auto& t : TfIdfIndex::tokenize(e.text)) counts[t] += 1.0;
      for (const auto& [t, c] : counts) df[t] += 1;
      tf.push_back(std::move(counts));
    }
  }

  std::map<std::string, double> weigh(const std::map<std::string, double>& counts) const {
    std::map<std::string, double> v;
    double norm = 0.0;
    for (const auto& [t, c] : counts) {
      auto it = df.find(t);
      if (it == df.end()) continue;  // unseen terms carry no weight
      double w = c * (std::log(static_cast<double>(n) / it->second) + 1.0);
      v[t] = w;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    if (norm > 0)
      for (auto& [t, w] : v) w /= norm;
    return v;
  }

  double score(size_t doc, const std::string& query_text) const {
    std::map<std::string, double> q;
    for (const auto& t : TfIdfIndex::tokenize(query_text)) q[t] += 1.0;
    auto qv = weigh(q);
    auto dv = weigh(tf[doc]);
    double dot = 0.0;
    for (const auto& [t, w] : qv) {
      auto it = dv.find(t);
      if (it != dv.end()) dot += w * it->second;
    }
    return dot;
  }
};

std::vector<KnowledgeEntry> sample_corpus() {
  return {
      {"kb-001", "riscv64", "undefined reference to atomic builtins on riscv64 link with latomic",
       {"linker"}, "review"},
      {"kb-002", "any", "nothing provides python3-setuptools add BuildRequires python3-setuptools",
       {"deps"}, "history"},
      {"kb-003", "riscv64", "vector extension intrinsics unavailable guard with ifdef riscv_vector",
       {"simd"}, "review"},
      {"kb-004", "aarch64", "neon intrinsics require arm_neon header include it in simd sources",
       {"simd"}, "review"},
      {"kb-005", "any", "test timeouts under qemu raise the check timeout multiplier",
       {"tests"}, "history"},
      {"kb-006", "x86_64", "sse2 assumed unconditionally add mno-sse fallback for baseline builds",
       {"simd"}, "review"},
  };
}

}  // namespace

TEST_SUITE("knowledge") {

TEST_CASE("tokenize lowercases, splits on non-alphanumerics, drops short tokens") {
  CHECK(TfIdfIndex::tokenize("Undefined-Reference to `foo_bar'") ==
        std::vector<std::string>{"undefined", "reference", "to", "foo", "bar"});
  CHECK(TfIdfIndex::tokenize("a b c") == std::vector<std::string>{});  // all length < 2
  CHECK(TfIdfIndex::tokenize("x86_64: OK") == std::vector<std::string>{"x86", "64", "ok"});
  CHECK(TfIdfIndex::tokenize("") == std::vector<std::string>{});
}

TEST_CASE("idf follows ln(N/df) + 1") {
  auto idx = TfIdfIndex::build(sample_corpus());
  size_t n = idx.size();
  REQUIRE(n == 6);
  // "intrinsics" appears in kb-003 and kb-004
  CHECK(idx.idf("intrinsics") == doctest::Approx(std::log(6.0 / 2.0) + 1.0).epsilon(1e-12));
  // unseen term
  CHECK(idx.idf("nonexistent_term_xyz") == 0.0);
}

TEST_CASE("query_text agrees with the dense brute-force oracle within 1e-9") {
  auto corpus = sample_corpus();
  auto idx = TfIdfIndex::build(corpus);
  DenseOracle oracle(corpus);

  std::vector<std::string> queries = {
      "undefined reference to atomic builtins riscv64",
      "nothing provides python3-setuptools",
      "intrinsics simd vector",
      "check timeout under qemu",
      "totally unrelated garden vegetables",
  };
  for (const auto& q : queries) {
    auto hits = idx.query_text(q, static_cast<int>(corpus.size()), 0.0);
    std::map<std::string, double> got;
    for (const auto& h : hits) got[h.id] = h.similarity;
    for (size_t d = 0; d < corpus.size(); ++d) {
      double expected = oracle.score(d, q);
      double actual = got.count(corpus[d].id) ? got[corpus[d].id] : 0.0;
      CAPTURE(q);
      CAPTURE(corpus[d].id);
      CHECK(std::fabs(actual - expected) < 1e-9);
    }
  }
}

TEST_CASE("randomized corpora agree with the oracle") {
  std::mt19937 rng(99);
  std::vector<std::string> vocab = {"error",  "link",   "atomic", "vector", "deps",
                                    "python", "module", "test",   "timeout", "qemu",
                                    "header", "missing", "symbol", "flag",  "patch"};
  std::uniform_int_distribution<int> len(2, 12), pick(0, static_cast<int>(vocab.size()) - 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<KnowledgeEntry> corpus;
    int docs = 3 + trial % 7;
    for (int d = 0; d < docs; ++d) {
      std::string text;
      int L = len(rng);
      for (int i = 0; i < L; ++i) text += vocab[pick(rng)] + " ";
      corpus.push_back({"id-" + std::to_string(d), "any", text, {}, ""});
    }
    auto idx = TfIdfIndex::build(corpus);
    DenseOracle oracle(corpus);
    std::string query;
    for (int i = 0; i < 5; ++i) query += vocab[pick(rng)] + " ";
    auto hits = idx.query_text(query, docs, 0.0);
    std::map<std::string, double> got;
    for (const auto& h : hits) got[h.id] = h.similarity;
    for (int d = 0; d < docs; ++d) {
      double expected = oracle.score(d, query);
      double actual = got.count("id-" + std::to_string(d)) ? got["id-" + std::to_string(d)] : 0.0;
      CHECK(std::fabs(actual - expected) < 1e-9);
    }
  }
}

TEST_CASE("self-query scores 1 and disjoint texts score 0") {
  auto corpus = sample_corpus();
  auto idx = TfIdfIndex::build(corpus);
  auto hits = idx.query_text(corpus[0].text, 1, 0.0);
  REQUIRE(!hits.empty());
  CHECK(hits[0].id == "kb-001");
  CHECK(hits[0].similarity == doctest::Approx(1.0).epsilon(1e-9));

  auto none = idx.query_text("zzz qqq www completely disjoint vocabulary", 5, 0.0);
  for (const auto& h : none) CHECK(h.similarity == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("isa filter applies at build time; `any` entries always pass") {
  auto idx = TfIdfIndex::build(sample_corpus(), "riscv64");
  CHECK(idx.size() == 4);  // 2 riscv64 + 2 any
  CHECK(idx.entry("kb-001") != nullptr);
  CHECK(idx.entry("kb-002") != nullptr);  // any
  CHECK(idx.entry("kb-004") == nullptr);  // aarch64 excluded
  CHECK(idx.entry("kb-006") == nullptr);  // x86_64 excluded
}

TEST_CASE("top-k and threshold bound the hit list; ties break by id") {
  std::vector<KnowledgeEntry> corpus = {
      {"b-twin", "any", "identical twin text", {}, ""},
      {"a-twin", "any", "identical twin text", {}, ""},
      {"c-other", "any", "something else entirely different", {}, ""},
  };
  auto idx = TfIdfIndex::build(corpus);
  auto hits = idx.query_text("identical twin text", 5, 0.15);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].similarity == doctest::Approx(hits[1].similarity));
  CHECK(hits[0].id == "a-twin");  // lexicographic on equal similarity
  CHECK(hits[1].id == "b-twin");

  auto one = idx.query_text("identical twin text", 1, 0.15);
  CHECK(one.size() == 1);
}

TEST_CASE("signal query builds its text from templates, keywords, and isa hint") {
  auto idx = TfIdfIndex::build(sample_corpus(), "riscv64");
  FailureSignal s;
  s.stage = BuildStage::build;
  s.template_text = "undefined reference to <*> atomic builtins";
  s.keywords = {"undefined reference"};
  auto hits = idx.query(std::vector<FailureSignal>{s}, "riscv64", 5, 0.10);
  REQUIRE(!hits.empty());
  CHECK(hits[0].id == "kb-001");
}

TEST_CASE("knowledge corpus round-trips through JSONL") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "evident-kb-test";
  fs::create_directories(dir);
  auto path = (dir / "corpus.jsonl").string();
  auto corpus = sample_corpus();
  save_knowledge(path, corpus);
  auto loaded = load_knowledge(path);
  REQUIRE(loaded.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(loaded[i].id == corpus[i].id);
    CHECK(loaded[i].isa == corpus[i].isa);
    CHECK(loaded[i].text == corpus[i].text);
    CHECK(loaded[i].tags == corpus[i].tags);
    CHECK(loaded[i].source == corpus[i].source);
  }
  fs::remove_all(dir);
}

TEST_CASE("malformed corpus lines raise config errors") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "evident-kb-bad";
  fs::create_directories(dir);
  auto path = (dir / "bad.jsonl").string();
  write_file_atomic(path, "{\"id\": \"x\"}\n");  // missing required text
  CHECK_THROWS(load_knowledge(path));
  write_file_atomic(path, "not json at all\n");
  CHECK_THROWS(load_knowledge(path));
  fs::remove_all(dir);
}

}  // TEST_SUITE
