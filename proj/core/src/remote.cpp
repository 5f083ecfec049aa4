#include "herlab/remote.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <semaphore>
#include <thread>

#include "herlab/error.hpp"
#include "herlab/text.hpp"

namespace herlab {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

struct RemoteRelabeler::Impl {
  explicit Impl(int in_flight) : slots(in_flight) {}
  std::counting_semaphore<INT_MAX> slots;
};

std::string describe_scene(const HeldObject& held) {
  std::string object = held.color.empty() ? held.name : held.color + " " + held.name;
  return "The agent is holding a " + object + ".";
}

Label parse_remote_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw MalformedResponseError("response lacks a string 'text' field");
  }
  Label label;
  label.text = first_line(j["text"].get<std::string>());
  if (label.text.empty()) throw EmptyLabelError("endpoint returned an empty label");

  const auto it = j.find("token_logprobs");
  if (it == j.end() || it->is_null() || (it->is_array() && it->empty())) {
    label.confidence = 0.5;
    label.confidence_fallback = true;
    return label;
  }
  if (!it->is_array()) throw MalformedResponseError("'token_logprobs' must be an array");
  double sum = 0.0;
  for (const auto& v : *it) {
    if (!v.is_number()) throw MalformedResponseError("'token_logprobs' must hold numbers");
    sum += v.get<double>();
  }
  const double mean = sum / static_cast<double>(it->size());
  label.confidence = std::clamp(std::exp(mean), 0.0, 1.0);
  return label;
}

RemoteRelabeler::RemoteRelabeler(EndpointConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error("remote relabeler needs an endpoint url");
  if (config_.max_in_flight < 1) throw Error("max_in_flight must be at least 1");
  if (config_.retries < 0) throw Error("retries must be non-negative");
  parse_url(config_.url);
  impl_ = std::make_unique<Impl>(config_.max_in_flight);
}

RemoteRelabeler::~RemoteRelabeler() = default;

Label RemoteRelabeler::relabel(const Outcome& outcome, const PromptSpec& prompt,
                               std::uint64_t /*episode_seed*/) const {
  if (outcome.is_timeout()) throw Error("cannot relabel a timed-out episode");
  Label label = remote_relabel(describe_scene(*outcome.held), prompt.render());
  if (prompt.kind == TemplateKind::PreferenceQA) {
    try {
      label.text = apply_answer_map(label.text, prompt);
    } catch (const UnmappedAnswerError&) {
      // kept verbatim; classified as irrelevant downstream
    }
  }
  return label;
}

Label RemoteRelabeler::remote_relabel(const std::string& scene, const std::string& prompt_text) const {
  const ParsedUrl url = parse_url(config_.url);
  const nlohmann::json request = {
      {"scene", scene}, {"prompt", prompt_text}, {"max_tokens", config_.max_tokens}};
  const std::string payload = request.dump();

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<INT_MAX>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
    }
    auto result = client.Post(url.path, payload, "application/json");
    if (!result) {
      last_error = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = "server error " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw TransportError(config_.url, "unexpected status " + std::to_string(result->status));
    }
    return parse_remote_response(result->body);
  }
  throw TransportError(config_.url, last_error + " after " + std::to_string(config_.retries + 1) +
                                        " attempts");
}

}  // namespace herlab
