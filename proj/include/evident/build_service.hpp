#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evident/evidence.hpp"
#include "evident/log_distiller.hpp"
#include "evident/types.hpp"

namespace evident {

struct BuildOutcome {
  BuildStatus status = BuildStatus::failed;
  std::optional<std::string> log_ref;
  std::string last_observed_state;
  double elapsed_s = 0.0;
};

struct PayloadFile {
  std::string path;
  std::string content;
};

struct BuildSubmission {
  std::string package_id;
  int iteration = 0;
  std::vector<PayloadFile> payload;
  std::string submitted_at;
};

// Maps a service-native terminal state onto the build status vocabulary;
// nullopt for non-terminal states (building, scheduled, ...). Unknown
// states map to failed with the raw state preserved by callers.
std::optional<BuildStatus> map_service_state(const std::string& state);

// Canonical digest of a submission payload, used by fixtures to assert
// what was uploaded.
std::string payload_digest(const BuildSubmission& submission);

// Upload-and-trigger / poll / fetch-log contract. submit() is final: it
// owns the one-build-per-iteration and no-scratch-leak guards so no
// implementation can bypass them.
class BuildService {
 public:
  virtual ~BuildService() = default;

  std::string submit(const BuildSubmission& submission);
  virtual BuildOutcome await_terminal(const std::string& token, double window_s) = 0;
  virtual std::string fetch_log(const std::string& token) = 0;

  // submit → await_terminal → fetch_log → feedback; timeouts yield partial
  // feedback (complete=false). Logs are stored under log_dir when set.
  // outcome_out, when non-null, receives the raw terminal observation
  // (elapsed wall time, last observed service state).
  BuildFeedback validate(const BuildSubmission& submission, double window_s,
                         const DistillOptions& distill_options = {},
                         const std::string& log_dir = "",
                         BuildOutcome* outcome_out = nullptr);

 protected:
  virtual std::string do_submit(const BuildSubmission& submission) = 0;

 private:
  std::set<std::pair<std::string, int>> accepted_;
};

// One scripted build exchange: the simulator consumes steps in order.
// delay_s > window models a hanging build.
struct FixtureStep {
  std::string expect_digest = "*";  // "*" accepts any payload
  std::string terminal_state = "failed";
  std::string log;
  double delay_s = 0.0;
};

std::vector<FixtureStep> load_session_fixture(const std::string& path);  // session.v1

// Deterministic replay of recorded build sessions with real polling, so
// timeout behavior is exercised with scaled-down windows.
class SimulatedService : public BuildService {
 public:
  explicit SimulatedService(std::vector<FixtureStep> steps, double poll_interval_s = 0.05);

  BuildOutcome await_terminal(const std::string& token, double window_s) override;
  std::string fetch_log(const std::string& token) override;

  size_t steps_consumed() const { return next_step_; }

 protected:
  std::string do_submit(const BuildSubmission& submission) override;

 private:
  struct InFlight {
    size_t step;
    std::chrono::steady_clock::time_point submitted;
    bool terminal_seen = false;
  };
  std::vector<FixtureStep> steps_;
  size_t next_step_ = 0;
  double poll_interval_s_;
  std::map<std::string, InFlight> inflight_;
};

// Thin adapter for an OBS-compatible HTTP surface. Credentials come from
// EVIDENT_SERVICE_USER / EVIDENT_SERVICE_PASS and are never logged.
struct RemoteServiceConfig {
  std::string base_url;  // http://host[:port]
  std::string project;
  std::string repository = "standard";
  std::string arch = "riscv64";
  double poll_interval_s = 10.0;
  int transport_retries = 2;
};

class RemoteBuildService : public BuildService {
 public:
  explicit RemoteBuildService(RemoteServiceConfig config);

  BuildOutcome await_terminal(const std::string& token, double window_s) override;
  std::string fetch_log(const std::string& token) override;

 protected:
  std::string do_submit(const BuildSubmission& submission) override;

 private:
  RemoteServiceConfig config_;
  std::string get_with_retries(const std::string& path);
};

}  // namespace evident
