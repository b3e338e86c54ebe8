#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "compact/genclient.hpp"
#include "compact/io_util.hpp"
#include "compact/remote_backend.hpp"

using namespace compact;

namespace {

std::string envelope(const std::string& content, bool with_usage = true) {
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array(
        {{{"message", {{"role", "assistant"}, {"content", content}}}}});
    if (with_usage) {
        reply["usage"] = {{"prompt_tokens", 350}, {"completion_tokens", 42}};
    }
    return reply.dump();
}

// Local completion endpoint for hermetic adapter tests.
class LocalServer {
public:
    explicit LocalServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

RemoteBackendOptions fast_options(const std::string& endpoint, int retries = 1) {
    RemoteBackendOptions options;
    options.endpoint = endpoint;
    options.max_retries = retries;
    options.backoff_base_seconds = 0.01;
    options.connect_timeout_seconds = 2.0;
    options.read_timeout_seconds = 5.0;
    return options;
}

}  // namespace

TEST_CASE("base64 vectors") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("request bodies carry params, prompts and the image payload") {
    const auto dir = std::filesystem::temp_directory_path() / "compact_test_remote";
    std::filesystem::create_directories(dir);
    const std::string image_path = (dir / "img.jpg").string();
    write_file_atomic(image_path, "JPEGDATA");

    RemoteBackend backend(fast_options("http://localhost:1/v1/chat/completions"));
    CompletionRequest request;
    request.system_prompt = "system text";
    request.user_prompt = "user text";
    request.image_ref = image_path;
    request.params.model_name = "test-model";

    const nlohmann::json body = nlohmann::json::parse(backend.build_request_body(request));
    std::filesystem::remove_all(dir);

    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == doctest::Approx(0.1));
    CHECK(body.at("top_p") == doctest::Approx(0.9));
    CHECK(body.at("max_tokens") == 1000);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "system text");
    const auto& user_content = body["messages"][1]["content"];
    REQUIRE(user_content.size() == 2);
    CHECK(user_content[0]["text"] == "user text");
    const std::string url = user_content[1]["image_url"]["url"].get<std::string>();
    CHECK(url == "data:image/jpeg;base64," + base64_encode("JPEGDATA"));
}

TEST_CASE("remote adapter round trip with usage metering") {
    LocalServer server([](const httplib::Request& req, httplib::Response& res) {
        const nlohmann::json body = nlohmann::json::parse(req.body);
        CHECK(body.contains("messages"));
        res.set_content(
            envelope(R"({"question": "What stands out?", "answer": "a kite",
                         "confidence": 88})"),
            "application/json");
    });

    RemoteBackend backend(fast_options(server.endpoint()));
    GenClient client(backend, GenerationParams{});
    const ConversationCandidate candidate =
        client.generate("img_1", "", Combination({Capability::color}), 0);
    CHECK(candidate.question == "What stands out?");
    CHECK(candidate.confidence == 88);
    CHECK(client.counters().metered_calls.load() == 1);
    CHECK(client.counters().prompt_tokens.load() == 350);
    CHECK(client.counters().completion_tokens.load() == 42);
}

TEST_CASE("rate-limit responses are retried") {
    std::atomic<int> hits{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        if (hits.fetch_add(1) == 0) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(envelope("[\"color\"]", false), "application/json");
    });

    RemoteBackend backend(fast_options(server.endpoint(), /*retries=*/2));
    GenClient client(backend, GenerationParams{});
    CHECK(client.analyze_capabilities("What color is it?") == mask_of(Capability::color));
    CHECK(hits.load() == 2);
    CHECK(client.counters().metered_calls.load() == 0);  // no usage reported
}

TEST_CASE("hard HTTP errors surface as transport errors") {
    LocalServer server([](const httplib::Request&, httplib::Response& res) {
        res.status = 403;
        res.set_content("forbidden", "text/plain");
    });
    RemoteBackend backend(fast_options(server.endpoint()));
    GenClient client(backend, GenerationParams{});
    CHECK_THROWS_AS(client.analyze_capabilities("q?"), TransportError);
}

TEST_CASE("an unreachable endpoint exhausts retries and gives up") {
    RemoteBackend backend(fast_options("http://127.0.0.1:9/v1/chat/completions", 1));
    GenClient client(backend, GenerationParams{});
    CHECK_THROWS_AS(client.analyze_capabilities("q?"), TransportError);
}

TEST_CASE("five-image smoke loop against the local endpoint") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.set_content(
            envelope(R"({"question": "Smoke question about the scene?",
                         "answer": "fine", "confidence": 95})",
                     false),
            "application/json");
    });

    RemoteBackend backend(fast_options(server.endpoint()));
    GenClient client(backend, GenerationParams{});
    for (int i = 0; i < 5; ++i) {
        const auto candidate = client.generate("img_" + std::to_string(i), "",
                                               Combination({Capability::color}), 0);
        CHECK(candidate.confidence == 95);
    }
    CHECK(calls.load() == 5);
    CHECK(client.counters().calls.load() == 5);
}
