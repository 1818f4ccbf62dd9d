#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evident/evidence.hpp"
#include "evident/types.hpp"

namespace evident {

struct ToolSpec {
  std::string name;
  json parameters = json::object();  // JSON-schema subset: required + property types
  std::string description;
};

class ToolRegistry {
 public:
  void add(ToolSpec spec);  // duplicate names rejected
  bool has(const std::string& name) const;
  const ToolSpec* spec(const std::string& name) const;
  std::vector<std::string> names() const;  // sorted
  size_t size() const { return tools_.size(); }

  // Checks required keys and property types; raises precondition on
  // violations. Unknown extra keys are allowed.
  void validate_arguments(const std::string& tool, const json& arguments) const;

 private:
  std::map<std::string, ToolSpec> tools_;
};

// The ten canonical tools the orchestrator dispatches.
ToolRegistry default_registry();

struct AgentTurn {
  enum class Kind { tool_call, final_turn };
  Kind kind = Kind::final_turn;
  std::string tool;
  json arguments = json::object();
  std::string note;

  bool operator==(const AgentTurn&) const = default;
};

json turn_to_json(const AgentTurn& turn);
AgentTurn turn_from_json(const json& j);

class AgentDriver {
 public:
  virtual ~AgentDriver() = default;
  // observations: results of this iteration's prior tool calls, newest last
  virtual AgentTurn next_turn(const PromptDocument& prompt,
                              const std::vector<json>& observations) = 0;
};

// One scripted step; if_status makes it conditional on the latest observed
// build status (skipped when it doesn't match).
struct ScriptTurn {
  AgentTurn turn;
  std::string if_status;
};

// Deterministic driver replaying a script.v1 file: turns are consumed in
// order; exhaustion produces a final turn.
class ScriptedDriver : public AgentDriver {
 public:
  explicit ScriptedDriver(std::vector<ScriptTurn> script,
                          const ToolRegistry* registry = nullptr);
  static ScriptedDriver from_file(const std::string& path,
                                  const ToolRegistry* registry = nullptr);

  AgentTurn next_turn(const PromptDocument& prompt,
                      const std::vector<json>& observations) override;

 private:
  std::vector<ScriptTurn> script_;
  size_t pos_ = 0;
  const ToolRegistry* registry_;
};

// Remote-model driver. The transport is injectable so tests never touch
// the wire; the default transport posts to EVIDENT_DRIVER_URL with the
// bearer token from EVIDENT_DRIVER_TOKEN (never logged).
class RemoteDriver : public AgentDriver {
 public:
  using Transport = std::function<json(const json& request)>;

  RemoteDriver(const ToolRegistry& registry, Transport transport,
               std::string model = "", double temperature = 1.0);
  static RemoteDriver over_http(const ToolRegistry& registry, std::string model = "",
                                double temperature = 1.0);

  // Invalid turns are rejected back to the model; a second consecutive
  // invalid response raises malformed_turn. Transport failures retry once,
  // then raise driver_unavailable.
  AgentTurn next_turn(const PromptDocument& prompt,
                      const std::vector<json>& observations) override;

 private:
  const ToolRegistry& registry_;
  Transport transport_;
  std::string model_;
  double temperature_;
};

// Static audit of one iteration's turns: analysis tools must precede
// repair tools, which precede submit_build, and the iteration must end
// with a submit_build call.
WorkflowVerdict enforce_workflow(const std::vector<AgentTurn>& turns);

// Phase index used by the audit: 0 analysis, 1 repair, 2 submit.
int tool_phase(const std::string& tool);

}  // namespace evident
