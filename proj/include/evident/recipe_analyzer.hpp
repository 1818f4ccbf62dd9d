#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evident/types.hpp"

namespace evident {

enum class LineKind { metadata, macro, stage, comment, other };
const char* line_kind_name(LineKind kind);

struct AttributedLine {
  std::string text;  // verbatim, no trailing newline
  LineKind kind = LineKind::other;
};

// `name [op version]`; anything richer (boolean deps, parenthesized
// expressions) is kept raw with complex=true and name=raw.
struct Dependency {
  std::string name;
  std::string op;       // "", "<", "<=", "=", ">=", ">"
  std::string version;  // "" when unversioned
  bool complex = false;
  std::string raw;
};

struct Conditional {
  std::string condition;   // the raw %if/%ifarch/... header line
  std::vector<int> lines;  // 0-based body line numbers (markers excluded)
};

struct RecipeConstraints {
  std::string name;
  std::string version;
  std::string release;
  std::vector<Dependency> build_requires;
  std::vector<Dependency> requires_;
  std::map<std::string, std::string> macros;
  std::map<int, std::string> sources;
  std::map<int, std::string> patches;
  std::map<BuildStage, std::vector<std::string>> stages;
  std::vector<Conditional> arch_conditionals;
  std::map<std::string, std::vector<std::string>> subpackages;
  std::vector<AttributedLine> lines;  // every input line, attributed
  bool trailing_newline = true;
};

// Throws broken_recipe when Name: is absent (or the text is empty) and
// structural_error with a 1-based line number on unbalanced %if/%endif.
RecipeConstraints parse_recipe(const std::string& recipe_text);

// Exact original text (losslessness check: render(parse(t)) == t).
std::string render_recipe(const RecipeConstraints& rc);

// recipe.v1
json recipe_to_json(const RecipeConstraints& rc);
RecipeConstraints recipe_from_json(const json& j);

// Names that dependency-flavored signals mention but build_requires lacks.
std::vector<std::string> list_dependency_gaps(const RecipeConstraints& rc,
                                              const std::vector<FailureSignal>& signals);

}  // namespace evident
