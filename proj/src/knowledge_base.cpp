#include "evident/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

std::vector<std::string> TfIdfIndex::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) tokens.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else
      flush();
  }
  flush();
  return tokens;
}

TfIdfIndex TfIdfIndex::build(const std::vector<KnowledgeEntry>& corpus,
                             const std::string& isa_filter) {
  TfIdfIndex index;
  for (const auto& e : corpus)
    if (isa_filter.empty() || e.isa == isa_filter || e.isa == "any")
      index.entries_.push_back(e);

  const size_t n = index.entries_.size();
  std::vector<std::map<std::string, int>> counts(n);
  for (size_t i = 0; i < n; ++i) {
    for (const auto& tok : tokenize(index.entries_[i].text)) counts[i][tok]++;
    for (const auto& [term, _] : counts[i]) index.df_[term]++;
  }

  index.vectors_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double norm_sq = 0.0;
    for (const auto& [term, tf] : counts[i]) {
      double w = tf * index.idf(term);
      index.vectors_[i][term] = w;
      norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
      double norm = std::sqrt(norm_sq);
      for (auto& [term, w] : index.vectors_[i]) w /= norm;
    }
  }
  return index;
}

double TfIdfIndex::idf(const std::string& term) const {
  auto it = df_.find(term);
  if (it == df_.end() || entries_.empty()) return 0.0;
  return std::log(static_cast<double>(entries_.size()) / it->second) + 1.0;
}

std::vector<QueryHit> TfIdfIndex::query_text(const std::string& text, int k,
                                             double threshold) const {
  if (k < 0) raise(ErrorCode::precondition, "k must be >= 0");

  std::map<std::string, int> counts;
  for (const auto& tok : tokenize(text)) counts[tok]++;

  std::map<std::string, double> qvec;
  double norm_sq = 0.0;
  for (const auto& [term, tf] : counts) {
    double w = tf * idf(term);
    if (w == 0.0) continue;
    qvec[term] = w;
    norm_sq += w * w;
  }
  if (norm_sq == 0.0) return {};
  double norm = std::sqrt(norm_sq);
  for (auto& [term, w] : qvec) w /= norm;

  std::vector<QueryHit> hits;
  for (size_t i = 0; i < entries_.size(); ++i) {
    double score = 0.0;
    for (const auto& [term, qw] : qvec) {
      auto it = vectors_[i].find(term);
      if (it != vectors_[i].end()) score += qw * it->second;
    }
    if (score >= threshold) hits.push_back({entries_[i].id, score});
  }

  std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  if (static_cast<int>(hits.size()) > k) hits.resize(static_cast<size_t>(k));
  return hits;
}

std::vector<QueryHit> TfIdfIndex::query(const std::vector<FailureSignal>& signals,
                                        const std::string& isa_hint, int k,
                                        double threshold) const {
  std::string text;
  for (const auto& s : signals) {
    text += s.template_text;
    text += '\n';
    for (const auto& kw : s.keywords) {
      text += kw;
      text += ' ';
    }
    text += '\n';
  }
  if (!isa_hint.empty()) {
    text += isa_hint;
    text += '\n';
  }
  return query_text(text, k, threshold);
}

const KnowledgeEntry* TfIdfIndex::entry(const std::string& id) const {
  for (const auto& e : entries_)
    if (e.id == id) return &e;
  return nullptr;
}

std::vector<KnowledgeEntry> load_knowledge(const std::string& path) {
  std::vector<KnowledgeEntry> entries;
  const std::string data = read_file_bytes(path);
  int lineno = 0;
  for (const auto& raw : split_lines(data)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorCode::config_error,
            "bad knowledge line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
    KnowledgeEntry entry;
    entry.id = j.value("id", "");
    entry.isa = j.value("isa", "any");
    entry.text = j.value("text", "");
    entry.source = j.value("source", "");
    if (j.contains("tags"))
      for (const auto& t : j["tags"]) entry.tags.push_back(t.get<std::string>());
    if (entry.id.empty() || entry.text.empty())
      raise(ErrorCode::config_error,
            "knowledge line " + std::to_string(lineno) + " missing id or text", lineno);
    entries.push_back(std::move(entry));
  }
  return entries;
}

void save_knowledge(const std::string& path, const std::vector<KnowledgeEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    json j{{"id", e.id}, {"isa", e.isa}, {"text", e.text}};
    if (!e.tags.empty()) j["tags"] = e.tags;
    if (!e.source.empty()) j["source"] = e.source;
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace evident
