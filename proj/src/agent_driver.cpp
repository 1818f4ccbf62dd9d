#include "evident/agent_driver.hpp"

#include <algorithm>
#include <cstdlib>

#include <httplib.h>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace evident {

void ToolRegistry::add(ToolSpec spec) {
  if (tools_.count(spec.name))
    raise(ErrorCode::duplicate_entry, "tool already registered: " + spec.name);
  tools_[spec.name] = std::move(spec);
}

bool ToolRegistry::has(const std::string& name) const { return tools_.count(name) > 0; }

const ToolSpec* ToolRegistry::spec(const std::string& name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tools_) out.push_back(name);
  return out;
}

namespace {

bool json_type_matches(const json& value, const std::string& type) {
  if (type == "string") return value.is_string();
  if (type == "integer") return value.is_number_integer();
  if (type == "number") return value.is_number();
  if (type == "boolean") return value.is_boolean();
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  return true;
}

}  // namespace

void ToolRegistry::validate_arguments(const std::string& tool, const json& arguments) const {
  const ToolSpec* s = spec(tool);
  if (!s) raise(ErrorCode::precondition, "unknown tool: " + tool);
  if (!arguments.is_object())
    raise(ErrorCode::precondition, "arguments must be an object for " + tool);
  for (const auto& req : s->parameters.value("required", json::array())) {
    if (!arguments.contains(req.get<std::string>()))
      raise(ErrorCode::precondition,
            "missing required argument '" + req.get<std::string>() + "' for " + tool);
  }
  const json props = s->parameters.value("properties", json::object());
  for (const auto& [key, value] : arguments.items()) {
    if (!props.contains(key)) continue;
    std::string type = props[key].value("type", "");
    if (!type.empty() && !json_type_matches(value, type))
      raise(ErrorCode::precondition,
            "argument '" + key + "' of " + tool + " must be a " + type);
  }
}

namespace {

json schema(std::initializer_list<std::pair<const char*, const char*>> props,
            std::initializer_list<const char*> required) {
  json properties = json::object();
  for (const auto& [name, type] : props) properties[name] = {{"type", type}};
  json req = json::array();
  for (const char* r : required) req.push_back(r);
  return json{{"type", "object"}, {"properties", properties}, {"required", req}};
}

}  // namespace

ToolRegistry default_registry() {
  ToolRegistry r;
  r.add({"distill_log", schema({{"window", "integer"}}, {}),
         "Extract stage-tagged failure signals from the most recent build log."});
  r.add({"parse_recipe", schema({{"path", "string"}}, {}),
         "Parse the build recipe into metadata, dependencies, macros, and stages."});
  r.add({"inventory", schema({}, {}),
         "List the workspace tree with plausible modification targets."});
  r.add({"read_file", schema({{"path", "string"}}, {"path"}),
         "Read the full content of one workspace file."});
  r.add({"unpack", schema({{"path", "string"}}, {"path"}),
         "Unpack a source archive into the scratch area for member edits."});
  r.add({"edit_member",
         schema({{"archive", "string"}, {"member", "string"}, {"content", "string"},
                 {"create", "boolean"}},
                {"archive", "member", "content"}),
         "Replace (or create) one member inside an unpacked archive."});
  r.add({"repack", schema({{"archive", "string"}}, {"archive"}),
         "Reassemble an unpacked archive in its original format."});
  r.add({"apply_config",
         schema({{"path", "string"}, {"content", "string"}, {"create", "boolean"}},
                {"path", "content"}),
         "Atomically replace a recipe or packaging script with new content."});
  r.add({"apply_source",
         schema({{"path", "string"}, {"content", "string"}, {"create", "boolean"},
                 {"tombstone", "boolean"}},
                {"path"}),
         "Atomically replace, create, or delete a source file."});
  r.add({"submit_build", schema({}, {}),
         "Submit the workspace for a validation build; ends the iteration."});
  return r;
}

json turn_to_json(const AgentTurn& turn) {
  if (turn.kind == AgentTurn::Kind::final_turn)
    return json{{"final", true}, {"note", turn.note}};
  return json{{"tool", turn.tool}, {"arguments", turn.arguments}, {"note", turn.note}};
}

AgentTurn turn_from_json(const json& j) {
  AgentTurn t;
  if (j.value("final", false)) {
    t.kind = AgentTurn::Kind::final_turn;
    t.note = j.value("note", "");
    return t;
  }
  t.kind = AgentTurn::Kind::tool_call;
  t.tool = j.value("tool", "");
  t.arguments = j.value("arguments", json::object());
  t.note = j.value("note", "");
  return t;
}

// ---------------------------------------------------------------- scripted

ScriptedDriver::ScriptedDriver(std::vector<ScriptTurn> script, const ToolRegistry* registry)
    : script_(std::move(script)), registry_(registry) {
  if (registry_)
    for (const auto& st : script_)
      if (st.turn.kind == AgentTurn::Kind::tool_call)
        registry_->validate_arguments(st.turn.tool, st.turn.arguments);
}

ScriptedDriver ScriptedDriver::from_file(const std::string& path, const ToolRegistry* registry) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    raise(ErrorCode::config_error, std::string("bad script file: ") + e.what());
  }
  if (doc.value("format", "") != "script.v1")
    raise(ErrorCode::config_error, "expected script.v1 document: " + path);
  std::vector<ScriptTurn> script;
  for (const auto& t : doc.value("turns", json::array()))
    script.push_back({turn_from_json(t), t.value("if_status", "")});
  return ScriptedDriver(std::move(script), registry);
}

namespace {

// the orchestrator injects {"build_status": ...} observations; the newest
// one is the condition scripts branch on
std::string latest_status(const std::vector<json>& observations) {
  for (auto it = observations.rbegin(); it != observations.rend(); ++it)
    if (it->is_object() && it->contains("build_status"))
      return it->value("build_status", "");
  return "";
}

}  // namespace

AgentTurn ScriptedDriver::next_turn(const PromptDocument&,
                                    const std::vector<json>& observations) {
  const std::string status = latest_status(observations);
  while (pos_ < script_.size()) {
    const ScriptTurn& st = script_[pos_++];
    if (!st.if_status.empty() && st.if_status != status) continue;
    return st.turn;
  }
  AgentTurn final_turn;
  final_turn.kind = AgentTurn::Kind::final_turn;
  final_turn.note = "script exhausted";
  return final_turn;
}

// ------------------------------------------------------------------ remote

RemoteDriver::RemoteDriver(const ToolRegistry& registry, Transport transport, std::string model,
                           double temperature)
    : registry_(registry),
      transport_(std::move(transport)),
      model_(std::move(model)),
      temperature_(temperature) {
  if (!transport_) raise(ErrorCode::config_error, "remote driver needs a transport");
}

RemoteDriver RemoteDriver::over_http(const ToolRegistry& registry, std::string model,
                                     double temperature) {
  const char* url = std::getenv("EVIDENT_DRIVER_URL");
  if (!url) raise(ErrorCode::config_error, "EVIDENT_DRIVER_URL is not set");
  std::string endpoint = url;
  Transport transport = [endpoint](const json& request) -> json {
    httplib::Client client(endpoint);
    if (const char* token = std::getenv("EVIDENT_DRIVER_TOKEN"))
      client.set_bearer_token_auth(token);
    client.set_read_timeout(120);
    auto res = client.Post("/v1/turns", request.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300)
      raise(ErrorCode::transport, "driver endpoint returned an error");
    return json::parse(res->body);
  };
  return RemoteDriver(registry, std::move(transport), std::move(model), temperature);
}

AgentTurn RemoteDriver::next_turn(const PromptDocument& prompt,
                                  const std::vector<json>& observations) {
  json tools = json::array();
  for (const auto& name : registry_.names()) {
    const ToolSpec* s = registry_.spec(name);
    tools.push_back({{"name", s->name},
                     {"description", s->description},
                     {"parameters", s->parameters}});
  }
  json messages = json::array();
  messages.push_back({{"role", "user"}, {"content", prompt.render()}});
  for (const auto& obs : observations)
    messages.push_back({{"role", "tool"}, {"content", obs.dump()}});

  constexpr int kMaxAttempts = 2;  // a second invalid turn aborts the iteration
  std::string rejection;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    json request{{"messages", messages}, {"tools", tools}, {"temperature", temperature_}};
    if (!model_.empty()) request["model"] = model_;
    if (!rejection.empty())
      request["messages"].push_back({{"role", "user"}, {"content", rejection}});

    json response;
    bool got_response = false;
    for (int t = 0; t < 2 && !got_response; ++t) {
      try {
        response = transport_(request);
        got_response = true;
      } catch (const std::exception& e) {
        if (t == 1)
          raise(ErrorCode::driver_unavailable,
                std::string("driver transport failed twice: ") + e.what());
      }
    }

    AgentTurn turn = turn_from_json(response);
    if (turn.kind == AgentTurn::Kind::final_turn) return turn;
    try {
      registry_.validate_arguments(turn.tool, turn.arguments);
      return turn;
    } catch (const Error& e) {
      rejection = std::string("invalid tool call rejected: ") + e.what() +
                  "; respond with a registered tool and schema-valid arguments";
    }
  }
  raise(ErrorCode::malformed_turn, "driver produced invalid turns at the retry bound");
}

// ---------------------------------------------------------------- workflow

int tool_phase(const std::string& tool) {
  static const std::map<std::string, int> phases = {
      {"distill_log", 0}, {"parse_recipe", 0}, {"inventory", 0}, {"read_file", 0},
      {"unpack", 1},      {"edit_member", 1},  {"repack", 1},    {"apply_config", 1},
      {"apply_source", 1}, {"submit_build", 2}};
  auto it = phases.find(tool);
  return it == phases.end() ? 1 : it->second;
}

WorkflowVerdict enforce_workflow(const std::vector<AgentTurn>& turns) {
  int current_phase = 0;
  bool misordered = false;
  for (const auto& t : turns) {
    if (t.kind != AgentTurn::Kind::tool_call) continue;
    int phase = tool_phase(t.tool);
    if (phase < current_phase) misordered = true;
    current_phase = std::max(current_phase, phase);
  }
  if (misordered) return WorkflowVerdict::misordered;
  if (turns.empty() || turns.back().kind != AgentTurn::Kind::tool_call ||
      turns.back().tool != "submit_build")
    return WorkflowVerdict::early_termination;
  return WorkflowVerdict::ok;
}

}  // namespace evident
