#include "evident/build_service.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <thread>

#include <httplib.h>

#include "evident/errors.hpp"
#include "evident/util.hpp"

namespace fs = std::filesystem;

namespace evident {

std::optional<BuildStatus> map_service_state(const std::string& state) {
  std::string s = to_lower(trim(state));
  if (s == "succeeded") return BuildStatus::succeeded;
  if (s == "failed") return BuildStatus::failed;
  if (s == "unresolvable" || s == "broken") return BuildStatus::unresolvable;
  static const char* nonterminal[] = {"building", "scheduled", "dispatching",
                                      "blocked",  "signing",   "finished"};
  for (const char* n : nonterminal)
    if (s == n) return std::nullopt;
  return BuildStatus::failed;  // unknown states; caller keeps the raw name
}

std::string payload_digest(const BuildSubmission& submission) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& f : submission.payload) items.emplace_back(f.path, sha256_hex(f.content));
  std::sort(items.begin(), items.end());
  std::string canon;
  for (const auto& [path, hash] : items) {
    canon += path;
    canon += '\n';
    canon += hash;
    canon += '\n';
  }
  return sha256_hex(canon);
}

std::string BuildService::submit(const BuildSubmission& submission) {
  auto key = std::make_pair(submission.package_id, submission.iteration);
  if (accepted_.count(key))
    raise(ErrorCode::boundary_violation,
          "iteration " + std::to_string(submission.iteration) + " of " +
              submission.package_id + " already submitted a build");
  for (const auto& f : submission.payload)
    if (f.path.find(".evident-scratch") != std::string::npos)
      raise(ErrorCode::path_escape,
            "scratch paths never enter a build payload: " + f.path);

  std::string token = do_submit(submission);
  accepted_.insert(key);
  return token;
}

BuildFeedback BuildService::validate(const BuildSubmission& submission, double window_s,
                                     const DistillOptions& distill_options,
                                     const std::string& log_dir, BuildOutcome* outcome_out) {
  std::string token = submit(submission);
  BuildOutcome outcome = await_terminal(token, window_s);
  if (outcome_out) *outcome_out = outcome;

  BuildFeedback fb;
  fb.iteration = submission.iteration;
  fb.status = outcome.status;

  if (outcome.status == BuildStatus::timeout) {
    fb.complete = false;
    fb.log_ref = "";
    return fb;  // partial feedback: only the last observed state exists
  }

  std::string log_text;
  try {
    log_text = fetch_log(token);
  } catch (const Error&) {
    fb.complete = false;  // terminal state but no retrievable log
    return fb;
  }

  if (!log_dir.empty()) {
    std::error_code ec;
    fs::create_directories(log_dir, ec);
    std::string path =
        (fs::path(log_dir) / ("iter" + std::to_string(submission.iteration) + ".log")).string();
    write_file_atomic(path, log_text);
    fb.log_ref = path;
  } else {
    fb.log_ref = outcome.log_ref.value_or("");
  }

  fb.complete = true;
  if (outcome.status != BuildStatus::succeeded)
    fb.signals = distill(log_text, distill_options);
  return fb;
}

// ------------------------------------------------------------- simulator

std::vector<FixtureStep> load_session_fixture(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    raise(ErrorCode::config_error, std::string("bad session fixture: ") + e.what());
  }
  if (doc.value("format", "") != "session.v1")
    raise(ErrorCode::config_error, "expected session.v1 document: " + path);

  std::vector<FixtureStep> steps;
  for (const auto& s : doc.value("steps", json::array())) {
    FixtureStep step;
    step.expect_digest = s.value("expect", "*");
    step.terminal_state = s.value("terminal", "failed");
    step.delay_s = s.value("delay", 0.0);
    if (s.contains("log_file")) {
      fs::path rel = s["log_file"].get<std::string>();
      fs::path base = fs::path(path).parent_path();
      step.log = read_file_bytes((base / rel).string());
    } else {
      step.log = s.value("log", "");
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

SimulatedService::SimulatedService(std::vector<FixtureStep> steps, double poll_interval_s)
    : steps_(std::move(steps)), poll_interval_s_(poll_interval_s) {}

std::string SimulatedService::do_submit(const BuildSubmission& submission) {
  if (next_step_ >= steps_.size())
    raise(ErrorCode::transport, "session fixture exhausted: no step for this submission");
  const FixtureStep& step = steps_[next_step_];
  if (step.expect_digest != "*" && !step.expect_digest.empty()) {
    std::string actual = payload_digest(submission);
    if (actual != step.expect_digest)
      raise(ErrorCode::precondition,
            "payload digest mismatch: fixture expected " + step.expect_digest + ", got " + actual);
  }
  std::string token = "b" + std::to_string(next_step_);
  inflight_[token] = {next_step_, std::chrono::steady_clock::now(), false};
  ++next_step_;
  return token;
}

BuildOutcome SimulatedService::await_terminal(const std::string& token, double window_s) {
  auto it = inflight_.find(token);
  if (it == inflight_.end())
    raise(ErrorCode::invalid_token, "unknown build token: " + token);
  if (window_s <= 0) raise(ErrorCode::precondition, "window must be > 0");

  const FixtureStep& step = steps_[it->second.step];
  BuildOutcome outcome;
  while (true) {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - it->second.submitted)
            .count();
    if (elapsed >= step.delay_s) {  // terminal state is now observable
      it->second.terminal_seen = true;
      auto status = map_service_state(step.terminal_state);
      outcome.status = status.value_or(BuildStatus::failed);
      outcome.last_observed_state = step.terminal_state;
      outcome.log_ref = "fixture step " + std::to_string(it->second.step);
      outcome.elapsed_s = elapsed;
      return outcome;
    }
    if (elapsed >= window_s) {  // window expired while the build hangs
      outcome.status = BuildStatus::timeout;
      outcome.last_observed_state = "building";
      outcome.elapsed_s = elapsed;
      return outcome;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(poll_interval_s_));
  }
}

std::string SimulatedService::fetch_log(const std::string& token) {
  auto it = inflight_.find(token);
  if (it == inflight_.end())
    raise(ErrorCode::invalid_token, "unknown build token: " + token);
  if (!it->second.terminal_seen)
    raise(ErrorCode::precondition, "no terminal state reached for " + token);
  return steps_[it->second.step].log;
}

// ---------------------------------------------------------------- remote

RemoteBuildService::RemoteBuildService(RemoteServiceConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty() || config_.project.empty())
    raise(ErrorCode::config_error, "remote service needs base_url and project");
}

namespace {

httplib::Client make_client(const std::string& base_url) {
  httplib::Client client(base_url);
  // credentials are read from the environment on purpose: they must never
  // appear in configs, logs, or reports
  const char* user = std::getenv("EVIDENT_SERVICE_USER");
  const char* pass = std::getenv("EVIDENT_SERVICE_PASS");
  if (user && pass) client.set_basic_auth(user, pass);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  return client;
}

}  // namespace

std::string RemoteBuildService::get_with_retries(const std::string& path) {
  httplib::Client client = make_client(config_.base_url);
  for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
    auto res = client.Get(path);
    if (res && res->status >= 200 && res->status < 300) return res->body;
    if (attempt == config_.transport_retries)
      raise(ErrorCode::transport,
            "GET " + path + " failed after " + std::to_string(attempt + 1) + " attempts");
  }
  raise(ErrorCode::transport, "unreachable");
}

std::string RemoteBuildService::do_submit(const BuildSubmission& submission) {
  httplib::Client client = make_client(config_.base_url);
  const std::string pkg = submission.package_id;
  for (const auto& f : submission.payload) {
    std::string path = "/source/" + config_.project + "/" + pkg + "/" + f.path;
    bool ok = false;
    for (int attempt = 0; attempt <= config_.transport_retries && !ok; ++attempt) {
      auto res = client.Put(path, f.content, "application/octet-stream");
      ok = res && res->status >= 200 && res->status < 300;
    }
    if (!ok) raise(ErrorCode::transport, "upload failed for " + f.path);
  }
  std::string trigger = "/build/" + config_.project + "?cmd=rebuild&package=" + pkg;
  auto res = client.Post(trigger, "", "text/plain");
  if (!res || res->status < 200 || res->status >= 300)
    raise(ErrorCode::transport, "rebuild trigger failed for " + pkg);
  return pkg;
}

BuildOutcome RemoteBuildService::await_terminal(const std::string& token, double window_s) {
  if (window_s <= 0) raise(ErrorCode::precondition, "window must be > 0");
  const std::string status_path = "/build/" + config_.project + "/" + config_.repository + "/" +
                                  config_.arch + "/" + token + "/_status";
  static const std::regex code_attr{R"rx(code="([^"]*)")rx"};

  auto started = std::chrono::steady_clock::now();
  std::string last_state = "unknown";
  while (true) {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (elapsed >= window_s) {
      BuildOutcome outcome;
      outcome.status = BuildStatus::timeout;
      outcome.last_observed_state = last_state;
      outcome.elapsed_s = elapsed;
      return outcome;
    }
    std::string body = get_with_retries(status_path);
    std::smatch m;
    if (std::regex_search(body, m, code_attr)) last_state = m[1];
    if (auto status = map_service_state(last_state)) {
      BuildOutcome outcome;
      outcome.status = *status;
      outcome.last_observed_state = last_state;
      outcome.elapsed_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      outcome.log_ref = token;
      return outcome;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(config_.poll_interval_s));
  }
}

std::string RemoteBuildService::fetch_log(const std::string& token) {
  return get_with_retries("/build/" + config_.project + "/" + config_.repository + "/" +
                          config_.arch + "/" + token + "/_log");
}

}  // namespace evident
