#include "evident/recipe_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

const char* line_kind_name(LineKind kind) {
  switch (kind) {
    case LineKind::metadata: return "metadata";
    case LineKind::macro: return "macro";
    case LineKind::stage: return "stage";
    case LineKind::comment: return "comment";
    case LineKind::other: return "other";
  }
  return "other";
}

namespace {

LineKind line_kind_from_name(const std::string& name) {
  if (name == "metadata") return LineKind::metadata;
  if (name == "macro") return LineKind::macro;
  if (name == "stage") return LineKind::stage;
  if (name == "comment") return LineKind::comment;
  return LineKind::other;
}

const std::regex kTagLine{R"(^([A-Za-z][A-Za-z0-9_]*?)(\d*)\s*:\s*(.*)$)"};
const std::regex kMacroDef{R"(^%(define|global)\s+(\S+)\s+(.*)$)"};
const std::regex kSectionHeader{R"(^%(prep|build|install|check|files|package|description|changelog|pre|post|preun|postun|pretrans|posttrans|trigger\w*)\b(.*)$)"};

bool is_cond_open(const std::string& t) {
  return starts_with(t, "%if");  // %if, %ifarch, %ifnarch, %ifos...
}

bool is_dep_op(const std::string& tok) {
  return tok == "<" || tok == "<=" || tok == "=" || tok == ">=" || tok == ">";
}

// one comma-chunk of a BuildRequires/Requires value → dependencies
void parse_dep_chunk(const std::string& chunk, std::vector<Dependency>& out) {
  std::string c = trim(chunk);
  if (c.empty()) return;

  auto opaque = [&] {
    Dependency d;
    d.name = c;
    d.raw = c;
    d.complex = true;
    out.push_back(std::move(d));
  };

  // rich/boolean dependency syntax is preserved, not interpreted
  if (c.front() == '(' ||
      c.find(" or ") != std::string::npos || c.find(" and ") != std::string::npos ||
      c.find(" with ") != std::string::npos || c.find(" if ") != std::string::npos ||
      c.find(" unless ") != std::string::npos) {
    opaque();
    return;
  }

  std::istringstream in(c);
  std::vector<std::string> toks;
  std::string tok;
  while (in >> tok) toks.push_back(tok);

  size_t i = 0;
  std::vector<Dependency> parsed;
  while (i < toks.size()) {
    if (is_dep_op(toks[i])) {  // op with no preceding name
      opaque();
      return;
    }
    Dependency d;
    d.name = toks[i];
    d.raw = toks[i];
    if (i + 1 < toks.size() && is_dep_op(toks[i + 1])) {
      if (i + 2 >= toks.size()) {  // dangling op
        opaque();
        return;
      }
      d.op = toks[i + 1];
      d.version = toks[i + 2];
      d.raw = toks[i] + " " + toks[i + 1] + " " + toks[i + 2];
      i += 3;
    } else {
      i += 1;
    }
    parsed.push_back(std::move(d));
  }
  for (auto& d : parsed) out.push_back(std::move(d));
}

void parse_dep_value(const std::string& value, std::vector<Dependency>& out) {
  std::string chunk;
  std::istringstream in(value);
  while (std::getline(in, chunk, ',')) parse_dep_chunk(chunk, out);
}

struct OpenConditional {
  std::string header;
  int header_line;  // 0-based
  std::vector<int> body;
};

enum class Section { preamble, stage, subpackage, prose };

}  // namespace

RecipeConstraints parse_recipe(const std::string& recipe_text) {
  if (recipe_text.empty())
    raise(ErrorCode::broken_recipe, "recipe text is empty");

  RecipeConstraints rc;
  rc.trailing_newline = recipe_text.back() == '\n';
  const auto raw_lines = split_lines(recipe_text);

  Section section = Section::preamble;
  BuildStage current_stage = BuildStage::other;
  std::string current_subpackage;
  std::vector<OpenConditional> cond_stack;
  std::vector<OpenConditional> closed;

  for (size_t idx = 0; idx < raw_lines.size(); ++idx) {
    const std::string& raw = raw_lines[idx];
    const std::string stripped = trim(raw);
    AttributedLine attributed{raw, LineKind::other};

    for (auto& oc : cond_stack) oc.body.push_back(static_cast<int>(idx));

    // conditionals attach to whatever section they appear in
    if (is_cond_open(stripped)) {
      cond_stack.push_back({stripped, static_cast<int>(idx), {}});
      attributed.kind = section == Section::stage ? LineKind::stage : LineKind::other;
      if (section == Section::stage) rc.stages[current_stage].push_back(raw);
      rc.lines.push_back(std::move(attributed));
      continue;
    }
    if (stripped == "%else" || starts_with(stripped, "%elif")) {
      if (cond_stack.empty())
        raise(ErrorCode::structural_error,
              "%else without %if at line " + std::to_string(idx + 1),
              static_cast<int>(idx + 1));
      attributed.kind = section == Section::stage ? LineKind::stage : LineKind::other;
      if (section == Section::stage) rc.stages[current_stage].push_back(raw);
      rc.lines.push_back(std::move(attributed));
      continue;
    }
    if (stripped == "%endif") {
      if (cond_stack.empty())
        raise(ErrorCode::structural_error,
              "%endif without %if at line " + std::to_string(idx + 1),
              static_cast<int>(idx + 1));
      OpenConditional oc = std::move(cond_stack.back());
      cond_stack.pop_back();
      if (!oc.body.empty()) oc.body.pop_back();  // drop the %endif itself
      closed.push_back(std::move(oc));
      attributed.kind = section == Section::stage ? LineKind::stage : LineKind::other;
      if (section == Section::stage) rc.stages[current_stage].push_back(raw);
      rc.lines.push_back(std::move(attributed));
      continue;
    }

    std::smatch m;
    if (std::regex_match(stripped, m, kSectionHeader)) {
      const std::string kind = m[1];
      const std::string rest = trim(m[2].str());
      if (kind == "prep" || kind == "build" || kind == "install" || kind == "check" ||
          kind == "files") {
        section = Section::stage;
        current_stage = kind == "prep"      ? BuildStage::prep
                        : kind == "build"   ? BuildStage::build
                        : kind == "install" ? BuildStage::install
                        : kind == "check"   ? BuildStage::check
                                            : BuildStage::files;
        rc.stages[current_stage];  // section exists even if body is empty
        attributed.kind = LineKind::stage;
      } else if (kind == "package") {
        section = Section::subpackage;
        current_subpackage = rest.empty() ? "(main)" : rest;
        rc.subpackages[current_subpackage];
        attributed.kind = LineKind::metadata;
      } else if (kind == "description" || kind == "changelog") {
        section = Section::prose;
        attributed.kind = LineKind::other;
      } else {
        // scriptlets (%pre, %post, ...) run at install time; their bodies
        // are staged directives without a dedicated stage bucket
        section = Section::stage;
        current_stage = BuildStage::other;
        rc.stages[current_stage];
        attributed.kind = LineKind::stage;
      }
      rc.lines.push_back(std::move(attributed));
      continue;
    }

    if (std::regex_match(stripped, m, kMacroDef)) {
      rc.macros[m[2]] = m[3];
      attributed.kind = LineKind::macro;
      rc.lines.push_back(std::move(attributed));
      continue;
    }

    if (!stripped.empty() && stripped[0] == '#') {
      attributed.kind = LineKind::comment;
      rc.lines.push_back(std::move(attributed));
      continue;
    }

    if (stripped.empty()) {
      rc.lines.push_back(std::move(attributed));  // blank → other
      continue;
    }

    switch (section) {
      case Section::stage:
        attributed.kind = LineKind::stage;
        rc.stages[current_stage].push_back(raw);
        break;
      case Section::subpackage:
        if (std::regex_match(stripped, m, kTagLine)) {
          attributed.kind = LineKind::metadata;
          rc.subpackages[current_subpackage].push_back(stripped);
        }
        break;
      case Section::prose:
        break;  // stays other
      case Section::preamble:
        if (std::regex_match(stripped, m, kTagLine)) {
          std::string tag = to_lower(m[1].str());
          const std::string index_digits = m[2];
          const std::string value = trim(m[3].str());
          attributed.kind = LineKind::metadata;
          if (tag == "name" && index_digits.empty()) rc.name = value;
          else if (tag == "version" && index_digits.empty()) rc.version = value;
          else if (tag == "release" && index_digits.empty()) rc.release = value;
          else if (tag == "source")
            rc.sources[index_digits.empty() ? 0 : std::stoi(index_digits)] = value;
          else if (tag == "patch")
            rc.patches[index_digits.empty() ? 0 : std::stoi(index_digits)] = value;
          else if (tag == "buildrequires" && index_digits.empty())
            parse_dep_value(value, rc.build_requires);
          else if (tag == "requires" && index_digits.empty())
            parse_dep_value(value, rc.requires_);
        }
        break;
    }
    rc.lines.push_back(std::move(attributed));
  }

  if (!cond_stack.empty()) {
    const auto& oc = cond_stack.back();
    raise(ErrorCode::structural_error,
          "unterminated conditional opened at line " + std::to_string(oc.header_line + 1),
          oc.header_line + 1);
  }
  if (rc.name.empty())
    raise(ErrorCode::broken_recipe, "recipe has no Name: field");

  std::sort(closed.begin(), closed.end(),
            [](const OpenConditional& a, const OpenConditional& b) {
              return a.header_line < b.header_line;
            });
  for (auto& oc : closed) rc.arch_conditionals.push_back({oc.header, std::move(oc.body)});
  return rc;
}

std::string render_recipe(const RecipeConstraints& rc) {
  std::string out;
  for (size_t i = 0; i < rc.lines.size(); ++i) {
    out += rc.lines[i].text;
    if (i + 1 < rc.lines.size() || rc.trailing_newline) out += '\n';
  }
  return out;
}

namespace {

json dep_to_json(const Dependency& d) {
  json j{{"name", d.name}, {"raw", d.raw}};
  if (!d.op.empty()) {
    j["op"] = d.op;
    j["version"] = d.version;
  }
  if (d.complex) j["complex"] = true;
  return j;
}

Dependency dep_from_json(const json& j) {
  Dependency d;
  d.name = j.value("name", "");
  d.raw = j.value("raw", d.name);
  d.op = j.value("op", "");
  d.version = j.value("version", "");
  d.complex = j.value("complex", false);
  return d;
}

}  // namespace

json recipe_to_json(const RecipeConstraints& rc) {
  json j;
  j["format"] = "recipe.v1";
  j["name"] = rc.name;
  j["version"] = rc.version;
  j["release"] = rc.release;
  j["build_requires"] = json::array();
  for (const auto& d : rc.build_requires) j["build_requires"].push_back(dep_to_json(d));
  j["requires"] = json::array();
  for (const auto& d : rc.requires_) j["requires"].push_back(dep_to_json(d));
  j["macros"] = json::object();
  for (const auto& [k, v] : rc.macros) j["macros"][k] = v;
  j["sources"] = json::object();
  for (const auto& [k, v] : rc.sources) j["sources"][std::to_string(k)] = v;
  j["patches"] = json::object();
  for (const auto& [k, v] : rc.patches) j["patches"][std::to_string(k)] = v;
  j["stages"] = json::object();
  for (const auto& [stage, lines] : rc.stages) j["stages"][to_string(stage)] = lines;
  j["arch_conditionals"] = json::array();
  for (const auto& c : rc.arch_conditionals)
    j["arch_conditionals"].push_back({{"condition", c.condition}, {"lines", c.lines}});
  j["subpackages"] = json::object();
  for (const auto& [k, v] : rc.subpackages) j["subpackages"][k] = v;
  j["lines"] = json::array();
  for (const auto& line : rc.lines)
    j["lines"].push_back({{"text", line.text}, {"kind", line_kind_name(line.kind)}});
  j["trailing_newline"] = rc.trailing_newline;
  return j;
}

RecipeConstraints recipe_from_json(const json& j) {
  if (j.value("format", "") != "recipe.v1")
    raise(ErrorCode::config_error, "expected recipe.v1 document");
  RecipeConstraints rc;
  rc.name = j.value("name", "");
  rc.version = j.value("version", "");
  rc.release = j.value("release", "");
  for (const auto& d : j.value("build_requires", json::array()))
    rc.build_requires.push_back(dep_from_json(d));
  for (const auto& d : j.value("requires", json::array()))
    rc.requires_.push_back(dep_from_json(d));
  // materialize before .items(): the proxy must not outlive the container
  const json macros = j.value("macros", json::object());
  for (const auto& [k, v] : macros.items()) rc.macros[k] = v.get<std::string>();
  const json sources = j.value("sources", json::object());
  for (const auto& [k, v] : sources.items()) rc.sources[std::stoi(k)] = v.get<std::string>();
  const json patches = j.value("patches", json::object());
  for (const auto& [k, v] : patches.items()) rc.patches[std::stoi(k)] = v.get<std::string>();
  const json stages = j.value("stages", json::object());
  for (const auto& [k, v] : stages.items())
    rc.stages[stage_from_string(k)] = v.get<std::vector<std::string>>();
  for (const auto& c : j.value("arch_conditionals", json::array()))
    rc.arch_conditionals.push_back(
        {c.value("condition", ""), c.value("lines", std::vector<int>{})});
  const json subpackages = j.value("subpackages", json::object());
  for (const auto& [k, v] : subpackages.items())
    rc.subpackages[k] = v.get<std::vector<std::string>>();
  for (const auto& line : j.value("lines", json::array()))
    rc.lines.push_back({line.value("text", ""), line_kind_from_name(line.value("kind", "other"))});
  rc.trailing_newline = j.value("trailing_newline", true);
  return rc;
}

namespace {

const std::regex kNothingProvides{R"(nothing provides\s+(?:\w+\()?([A-Za-z0-9_.+:/-]+))"};
const std::regex kNoModule{R"(No module named\s+'?([A-Za-z0-9_.]+)'?)"};
const std::regex kCmdNotFound{R"(([A-Za-z0-9_.+-]+):\s+command not found)"};

}  // namespace

std::vector<std::string> list_dependency_gaps(const RecipeConstraints& rc,
                                              const std::vector<FailureSignal>& signals) {
  std::vector<std::string> declared;
  for (const auto& d : rc.build_requires) declared.push_back(d.name);

  std::vector<std::string> gaps;
  auto consider = [&](const std::string& name) {
    if (name.empty()) return;
    if (std::find(declared.begin(), declared.end(), name) != declared.end()) return;
    if (std::find(gaps.begin(), gaps.end(), name) != gaps.end()) return;
    gaps.push_back(name);
  };
  auto scan = [&](const std::string& text) {
    std::smatch m;
    std::string rest = text;
    while (std::regex_search(rest, m, kNothingProvides)) {
      consider(m[1]);
      rest = m.suffix();
    }
    rest = text;
    while (std::regex_search(rest, m, kNoModule)) {
      consider(m[1]);
      rest = m.suffix();
    }
    rest = text;
    while (std::regex_search(rest, m, kCmdNotFound)) {
      consider(m[1]);
      rest = m.suffix();
    }
  };

  for (const auto& s : signals) {
    scan(s.template_text);
    for (const auto& line : s.window) scan(line);
  }
  return gaps;
}

}  // namespace evident
