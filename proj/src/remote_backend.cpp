#include "compact/remote_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "compact/io_util.hpp"
#include "compact/log.hpp"

namespace compact {

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint must start with http:// or https://: " +
                                    url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string guess_mime(const std::string& path) {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "image/jpeg";
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const unsigned a = static_cast<unsigned char>(bytes[i]);
        const unsigned b = static_cast<unsigned char>(bytes[i + 1]);
        const unsigned c = static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[((a & 0x3) << 4) | (b >> 4)]);
        out.push_back(alphabet[((b & 0xF) << 2) | (c >> 6)]);
        out.push_back(alphabet[c & 0x3F]);
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned a = static_cast<unsigned char>(bytes[i]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[(a & 0x3) << 4]);
        out += "==";
    } else if (rest == 2) {
        const unsigned a = static_cast<unsigned char>(bytes[i]);
        const unsigned b = static_cast<unsigned char>(bytes[i + 1]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[((a & 0x3) << 4) | (b >> 4)]);
        out.push_back(alphabet[(b & 0xF) << 2]);
        out.push_back('=');
    }
    return out;
}

struct RemoteBackend::Impl {
    RemoteBackendOptions options;
    ParsedUrl url;
    std::string api_key;
    RequestLimiter limiter;

    explicit Impl(RemoteBackendOptions opts)
        : options(std::move(opts)), url(parse_url(options.endpoint)),
          limiter(options.max_inflight) {
        if (const char* key = std::getenv(options.api_key_env.c_str())) {
            api_key = key;
        }
    }
};

RemoteBackend::RemoteBackend(RemoteBackendOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::build_request_body(const CompletionRequest& request) const {
    nlohmann::json user_content = nlohmann::json::array();
    user_content.push_back({{"type", "text"}, {"text", request.user_prompt}});
    if (!request.image_ref.empty()) {
        std::string image_url = request.image_ref;
        if (std::filesystem::exists(request.image_ref)) {
            image_url = "data:" + guess_mime(request.image_ref) + ";base64," +
                        base64_encode(read_file(request.image_ref));
        }
        user_content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", image_url}}}});
    }

    nlohmann::json body;
    body["model"] = request.params.model_name;
    body["temperature"] = request.params.temperature;
    body["top_p"] = request.params.top_p;
    body["max_tokens"] = request.params.max_tokens;
    body["messages"] = nlohmann::json::array(
        {{{"role", "system"}, {"content", request.system_prompt}},
         {{"role", "user"}, {"content", user_content}}});
    return body.dump();
}

CompletionResponse RemoteBackend::complete(const CompletionRequest& request) {
    const std::string body = build_request_body(request);

    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!impl_->api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + impl_->api_key);
    }

    impl_->limiter.acquire();
    struct Release {
        RequestLimiter& limiter;
        ~Release() { limiter.release(); }
    } release{impl_->limiter};

    std::string last_error;
    for (int attempt = 0; attempt <= impl_->options.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto backoff = std::chrono::duration<double>(
                impl_->options.backoff_base_seconds * attempt);
            std::this_thread::sleep_for(
                std::chrono::duration_cast<std::chrono::milliseconds>(backoff));
        }

        httplib::Client client(impl_->url.base);
        client.set_connection_timeout(
            std::chrono::duration<double>(impl_->options.connect_timeout_seconds));
        client.set_read_timeout(
            std::chrono::duration<double>(impl_->options.read_timeout_seconds));

        auto result = client.Post(impl_->url.path, headers, body, "application/json");
        if (!result) {
            last_error = "transport: " + httplib::to_string(result.error());
            log_warn("backend_retry", {{"attempt", std::to_string(attempt)},
                                       {"error", last_error}});
            continue;
        }
        if (result->status == 429 || result->status >= 500) {
            last_error = "status " + std::to_string(result->status);
            log_warn("backend_retry", {{"attempt", std::to_string(attempt)},
                                       {"error", last_error}});
            continue;
        }
        if (result->status != 200) {
            throw TransportError("backend returned status " +
                                 std::to_string(result->status) + ": " +
                                 result->body.substr(0, 200));
        }

        try {
            const nlohmann::json reply = nlohmann::json::parse(result->body);
            CompletionResponse response;
            response.text = reply.at("choices").at(0).at("message").at("content")
                                .get<std::string>();
            if (reply.contains("usage")) {
                const auto& usage = reply.at("usage");
                response.usage.prompt_tokens = usage.value("prompt_tokens", 0L);
                response.usage.completion_tokens = usage.value("completion_tokens", 0L);
                response.usage.metered = true;
            }
            return response;
        } catch (const nlohmann::json::exception& e) {
            throw MalformedReplyError(std::string("completion envelope: ") + e.what());
        }
    }
    throw TransportError("backend unavailable after " +
                         std::to_string(impl_->options.max_retries + 1) +
                         " attempts; last error: " + last_error);
}

}  // namespace compact
