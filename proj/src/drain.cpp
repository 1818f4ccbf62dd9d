#include "evident/drain.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "evident/errors.hpp"

namespace evident {

namespace {

constexpr const char* kWildcard = "<*>";

bool has_digit(const std::string& tok) {
  return std::any_of(tok.begin(), tok.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

// A token is numeric when, ignoring separator punctuation and a 0x prefix,
// only digits (or hex digits after 0x) remain. "10.0.0.1", "42", "0x7fff"
// are numeric; "main.c:10:" is not.
bool is_numeric_token(const std::string& tok) {
  if (tok.empty()) return false;
  std::string body = tok;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    return std::all_of(body.begin() + 2, body.end(),
                       [](unsigned char c) { return std::isxdigit(c) != 0; }) &&
           body.size() > 2;
  }
  bool any_digit = false;
  for (unsigned char c : body) {
    if (std::isdigit(c)) {
      any_digit = true;
      continue;
    }
    switch (c) {
      case '.': case ',': case ':': case ';': case '%':
      case '(': case ')': case '[': case ']': case '=': case '-': case '+':
        continue;
      default:
        return false;
    }
  }
  return any_digit;
}

}  // namespace

std::vector<std::string> TemplateMiner::tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(is_numeric_token(tok) ? kWildcard : tok);
  return tokens;
}

bool TemplateMiner::matches_template(const std::string& line, const std::string& template_text) {
  auto lt = tokenize(line);
  std::vector<std::string> tt;
  {
    std::istringstream in(template_text);
    std::string tok;
    while (in >> tok) tt.push_back(tok);
  }
  if (lt.size() != tt.size()) return false;
  for (size_t i = 0; i < lt.size(); ++i)
    if (tt[i] != kWildcard && tt[i] != lt[i]) return false;
  return true;
}

struct Cluster {
  int id;
  std::vector<std::string> tokens;  // template tokens, wildcarded in place
  int support = 0;
};

struct Node {
  std::map<std::string, std::unique_ptr<Node>> children;
  std::vector<int> cluster_ids;  // leaf level only
};

struct TemplateMiner::Impl {
  DrainParams params;
  Node root;
  std::vector<Cluster> clusters;

  // sim = fraction of positions where the template token equals the line
  // token; wildcard positions do not count as matches.
  static double similarity(const std::vector<std::string>& tmpl,
                           const std::vector<std::string>& tokens) {
    if (tmpl.empty()) return 1.0;
    int same = 0;
    for (size_t i = 0; i < tmpl.size(); ++i)
      if (tmpl[i] == tokens[i] && tmpl[i] != kWildcard) ++same;
    return static_cast<double>(same) / static_cast<double>(tmpl.size());
  }

  int add(const std::vector<std::string>& tokens) {
    Node* node = &route(tokens);
    int best = -1;
    double best_sim = -1.0;
    for (int cid : node->cluster_ids) {
      double sim = similarity(clusters[static_cast<size_t>(cid)].tokens, tokens);
      if (sim > best_sim) {
        best_sim = sim;
        best = cid;
      }
    }
    if (best >= 0 && best_sim >= params.similarity) {
      auto& c = clusters[static_cast<size_t>(best)];
      for (size_t i = 0; i < c.tokens.size(); ++i)
        if (c.tokens[i] != tokens[i]) c.tokens[i] = kWildcard;
      ++c.support;
      return best;
    }
    int id = static_cast<int>(clusters.size());
    clusters.push_back(Cluster{id, tokens, 1});
    node->cluster_ids.push_back(id);
    return id;
  }

  Node& route(const std::vector<std::string>& tokens) {
    Node* node = &child(root, std::to_string(tokens.size()));
    int token_levels = std::max(0, params.depth - 2);
    for (int level = 0; level < token_levels; ++level) {
      if (static_cast<size_t>(level) >= tokens.size()) break;
      const std::string& tok = tokens[static_cast<size_t>(level)];
      std::string key = (tok == kWildcard || has_digit(tok)) ? kWildcard : tok;
      if (node->children.find(key) == node->children.end() &&
          static_cast<int>(node->children.size()) >= params.max_children)
        key = kWildcard;
      node = &child(*node, key);
    }
    return *node;
  }

  static Node& child(Node& parent, const std::string& key) {
    auto& slot = parent.children[key];
    if (!slot) slot = std::make_unique<Node>();
    return *slot;
  }
};

TemplateMiner::TemplateMiner(DrainParams params) : impl_(std::make_unique<Impl>()) {
  if (params.depth < 3) raise(ErrorCode::config_error, "drain depth must be >= 3");
  if (params.similarity <= 0.0 || params.similarity > 1.0)
    raise(ErrorCode::config_error, "drain similarity must be in (0, 1]");
  impl_->params = params;
}

TemplateMiner::~TemplateMiner() = default;
TemplateMiner::TemplateMiner(TemplateMiner&&) noexcept = default;
TemplateMiner& TemplateMiner::operator=(TemplateMiner&&) noexcept = default;

int TemplateMiner::add_line(const std::string& line) {
  return impl_->add(tokenize(line));
}

std::string TemplateMiner::template_of(int cluster_id) const {
  const auto& c = impl_->clusters.at(static_cast<size_t>(cluster_id));
  std::string joined;
  for (size_t i = 0; i < c.tokens.size(); ++i) {
    if (i) joined += ' ';
    joined += c.tokens[i];
  }
  return joined;
}

int TemplateMiner::support_of(int cluster_id) const {
  return impl_->clusters.at(static_cast<size_t>(cluster_id)).support;
}

std::vector<std::pair<std::string, int>> TemplateMiner::templates() const {
  std::vector<std::pair<std::string, int>> out;
  out.reserve(impl_->clusters.size());
  for (size_t i = 0; i < impl_->clusters.size(); ++i)
    out.emplace_back(template_of(static_cast<int>(i)), impl_->clusters[i].support);
  return out;
}

}  // namespace evident
