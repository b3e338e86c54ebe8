#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "compact/taxonomy.hpp"

namespace compact {

struct GenerationParams {
    double temperature = 0.1;
    double top_p = 0.9;
    int max_tokens = 1000;
    std::string model_name = "gemini-2.0-flash";

    void validate() const {
        if (temperature < 0.0) {
            throw std::invalid_argument("generation.temperature must be >= 0");
        }
        if (!(top_p > 0.0) || top_p > 1.0) {
            throw std::invalid_argument("generation.top_p must be in (0, 1]");
        }
        if (max_tokens < 1) {
            throw std::invalid_argument("generation.max_tokens must be >= 1");
        }
    }
};

enum class RequestKind { generation, analysis, verification };

// One text+image completion. Backends see only this surface; the hint fields
// let the fixture-replay backend key its records and are ignored by remote
// adapters.
struct CompletionRequest {
    RequestKind kind = RequestKind::generation;
    std::string system_prompt;
    std::string user_prompt;
    std::string image_ref;  // file path or URL; empty for text-only calls
    GenerationParams params;

    // fixture lookup hints
    std::string image_id;
    std::string combination_key;
    int attempt_index = 0;
    std::string question;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool metered = false;  // true when the backend reported real usage
};

struct CompletionResponse {
    std::string text;
    TokenUsage usage;
};

// Transient or permanent transport problem; the remote adapter retries
// internally before surfacing this.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Backend replied but the reply does not parse into the expected shape.
// Counts as one attempt.
class MalformedReplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Monotone accounting across all backend calls made through one client.
struct UsageCounters {
    std::atomic<long> calls{0};
    std::atomic<long> metered_calls{0};
    std::atomic<long> prompt_tokens{0};
    std::atomic<long> completion_tokens{0};
    std::atomic<long> malformed_replies{0};
    std::atomic<long> dropped_capability_names{0};
};

// Generator output awaiting verification.
struct ConversationCandidate {
    std::string image_id;
    Combination requested;
    std::string question;
    std::string answer;
    int confidence = 0;  // 0-100
    int attempt_index = 0;
};

struct CapabilityVerdict {
    CapabilityMask identified = 0;
    bool matched = false;
};

// Prompt rendering, backend dispatch and reply parsing for the three
// generation-side operations.
class GenClient {
public:
    // strict_capability_match: matched requires identified == requested;
    // default accepts identified ⊇ requested (generators habitually fold
    // object recognition into otherwise-matching questions).
    GenClient(Backend& backend, GenerationParams params,
              bool strict_capability_match = false)
        : backend_(backend), params_(std::move(params)), strict_(strict_capability_match) {
        params_.validate();
    }

    ConversationCandidate generate(const std::string& image_id,
                                   const std::string& image_ref,
                                   const Combination& combo, int attempt_index);

    CapabilityMask analyze_capabilities(const std::string& question);

    CapabilityVerdict verify_capabilities(const std::string& question,
                                          const std::string& answer,
                                          const Combination& requested);

    const UsageCounters& counters() const { return counters_; }
    const GenerationParams& params() const { return params_; }
    bool strict_capability_match() const { return strict_; }

private:
    CompletionResponse dispatch(const CompletionRequest& request);

    Backend& backend_;
    GenerationParams params_;
    bool strict_;
    UsageCounters counters_;
};

}  // namespace compact
