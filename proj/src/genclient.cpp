#include "compact/genclient.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "compact/prompts.hpp"

namespace compact {

namespace {

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

// Parses a completion body that should carry a single JSON value. Tolerates
// markdown code fences and prose around the value.
nlohmann::json extract_json(const std::string& text) {
    std::string body = trim(text);
    if (body.starts_with("```")) {
        std::size_t start = body.find('\n');
        std::size_t end = body.rfind("```");
        if (start != std::string::npos && end != std::string::npos && end > start) {
            body = trim(body.substr(start + 1, end - start - 1));
        }
    }
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        // fall through to substring scan
    }
    for (char open : {'{', '['}) {
        const char close = open == '{' ? '}' : ']';
        std::size_t start = body.find(open);
        std::size_t end = body.rfind(close);
        if (start == std::string::npos || end == std::string::npos || end <= start) {
            continue;
        }
        try {
            return nlohmann::json::parse(body.substr(start, end - start + 1));
        } catch (const nlohmann::json::parse_error&) {
        }
    }
    throw MalformedReplyError("reply carries no parseable JSON value: " +
                              body.substr(0, 120));
}

}  // namespace

CompletionResponse GenClient::dispatch(const CompletionRequest& request) {
    CompletionResponse response = backend_.complete(request);
    counters_.calls.fetch_add(1, std::memory_order_relaxed);
    if (response.usage.metered) {
        counters_.metered_calls.fetch_add(1, std::memory_order_relaxed);
        counters_.prompt_tokens.fetch_add(response.usage.prompt_tokens,
                                          std::memory_order_relaxed);
        counters_.completion_tokens.fetch_add(response.usage.completion_tokens,
                                              std::memory_order_relaxed);
    }
    return response;
}

ConversationCandidate GenClient::generate(const std::string& image_id,
                                          const std::string& image_ref,
                                          const Combination& combo, int attempt_index) {
    CompletionRequest request;
    request.kind = RequestKind::generation;
    request.system_prompt = std::string(prompts::generation_system());
    request.user_prompt = prompts::render_generation_user(combo);
    request.image_ref = image_ref;
    request.params = params_;
    request.image_id = image_id;
    request.combination_key = combo.key();
    request.attempt_index = attempt_index;

    const CompletionResponse response = dispatch(request);
    try {
        const nlohmann::json j = extract_json(response.text);
        if (!j.is_object() || !j.contains("question") || !j.contains("answer") ||
            !j.contains("confidence")) {
            throw MalformedReplyError(
                "generation reply must be an object with question/answer/confidence");
        }
        ConversationCandidate candidate{image_id, combo,
                                        trim(j.at("question").get<std::string>()),
                                        trim(j.at("answer").get<std::string>()),
                                        j.at("confidence").get<int>(), attempt_index};
        if (candidate.question.empty() || candidate.answer.empty()) {
            throw MalformedReplyError("generation reply has empty question or answer");
        }
        if (candidate.confidence < 0 || candidate.confidence > 100) {
            throw MalformedReplyError("confidence outside [0, 100]: " +
                                      std::to_string(candidate.confidence));
        }
        return candidate;
    } catch (const MalformedReplyError&) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw;
    } catch (const nlohmann::json::exception& e) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw MalformedReplyError(std::string("generation reply: ") + e.what());
    }
}

CapabilityMask GenClient::analyze_capabilities(const std::string& question) {
    if (trim(question).empty()) {
        throw std::invalid_argument("analyze_capabilities: question is empty");
    }
    CompletionRequest request;
    request.kind = RequestKind::analysis;
    request.system_prompt = std::string(prompts::analysis_system());
    request.user_prompt = prompts::render_analysis_user(question);
    request.params = params_;
    request.question = question;

    const CompletionResponse response = dispatch(request);
    try {
        const nlohmann::json j = extract_json(response.text);
        if (!j.is_array()) {
            throw MalformedReplyError("analysis reply must be a JSON array");
        }
        CapabilityMask mask = 0;
        for (const auto& item : j) {
            Capability c;
            if (try_parse_capability(item.get<std::string>(), c)) {
                mask |= mask_of(c);
            } else {
                counters_.dropped_capability_names.fetch_add(1,
                                                             std::memory_order_relaxed);
            }
        }
        return mask;
    } catch (const MalformedReplyError&) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw;
    } catch (const nlohmann::json::exception& e) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw MalformedReplyError(std::string("analysis reply: ") + e.what());
    }
}

CapabilityVerdict GenClient::verify_capabilities(const std::string& question,
                                                 const std::string& answer,
                                                 const Combination& requested) {
    CompletionRequest request;
    request.kind = RequestKind::verification;
    request.system_prompt = std::string(prompts::verification_system());
    request.user_prompt = prompts::render_verification_user(question, answer, requested);
    request.params = params_;
    request.question = question;
    request.combination_key = requested.key();

    const CompletionResponse response = dispatch(request);
    try {
        const nlohmann::json j = extract_json(response.text);
        if (!j.is_array()) {
            throw MalformedReplyError("verification reply must be a JSON array");
        }
        CapabilityVerdict verdict;
        for (const auto& item : j) {
            Capability c;
            if (try_parse_capability(item.get<std::string>(), c)) {
                verdict.identified |= mask_of(c);
            } else {
                counters_.dropped_capability_names.fetch_add(1,
                                                             std::memory_order_relaxed);
            }
        }
        const CapabilityMask req = requested.mask();
        verdict.matched = strict_ ? verdict.identified == req
                                  : (verdict.identified & req) == req;
        return verdict;
    } catch (const MalformedReplyError&) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw;
    } catch (const nlohmann::json::exception& e) {
        counters_.malformed_replies.fetch_add(1, std::memory_order_relaxed);
        throw MalformedReplyError(std::string("verification reply: ") + e.what());
    }
}

}  // namespace compact
