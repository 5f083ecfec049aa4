#pragma once

#include <memory>
#include <string>

#include "herlab/relabeler.hpp"

namespace herlab {

struct EndpointConfig {
  std::string url;  // http://host:port/path
  int max_tokens = 32;
  int timeout_ms = 10000;
  int retries = 2;
  int backoff_ms = 100;
  int max_in_flight = 4;
};

/// Textual stand-in for the final observation: "The agent is holding a red plane."
std::string describe_scene(const HeldObject& held);

/// Parses {"text": string, "token_logprobs": [number]}. The label text is the first
/// line of the model text; confidence is exp(mean log-probability) clamped to [0, 1],
/// or 0.5 with the fallback flag when log-probabilities are missing or empty.
/// Throws MalformedResponseError or EmptyLabelError.
Label parse_remote_response(const std::string& body);

/// Relabels through an HTTP text-generation endpoint. At most max_in_flight requests
/// are outstanding at once; transport failures and 5xx replies are retried with
/// exponential backoff before a TransportError naming the endpoint is raised.
class RemoteRelabeler final : public Relabeler {
 public:
  explicit RemoteRelabeler(EndpointConfig config);
  ~RemoteRelabeler() override;

  Label relabel(const Outcome& outcome, const PromptSpec& prompt,
                std::uint64_t episode_seed) const override;
  std::string fingerprint() const override { return "remote@" + config_.url; }

  Label remote_relabel(const std::string& scene, const std::string& prompt_text) const;

 private:
  struct Impl;
  EndpointConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace herlab
