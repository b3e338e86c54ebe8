#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

#include "compact/genclient.hpp"

namespace compact {

// Bounds in-flight backend requests across worker threads.
class RequestLimiter {
public:
    explicit RequestLimiter(int max_inflight) : available_(max_inflight) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

struct RemoteBackendOptions {
    std::string endpoint;  // e.g. http://host:port/v1/chat/completions
    std::string api_key_env = "COMPACT_API_KEY";
    int max_retries = 3;      // extra attempts on transport/429/5xx failures
    int max_inflight = 32;
    double connect_timeout_seconds = 10.0;
    double read_timeout_seconds = 120.0;
    double backoff_base_seconds = 0.5;  // grows linearly per retry
};

// OpenAI-compatible chat-completions adapter. Sends the system and user
// prompts plus the image (base64 data URL when image_ref is a readable file,
// verbatim URL otherwise) and returns the first choice's message content.
// Token usage is taken from the response when reported.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteBackendOptions options);
    ~RemoteBackend() override;

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "remote"; }

    // request body for a given completion, exposed for tests
    std::string build_request_body(const CompletionRequest& request) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::string_view bytes);

}  // namespace compact
