#include "compact/mock_backend.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "compact/rng.hpp"

namespace compact {

namespace {

std::string hex16(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

// Synthesized questions are made of hash-derived tokens so no two distinct
// (image, combination, attempt) keys share vocabulary. The word-overlap
// filter would otherwise trip on a shared scaffold.
std::string synth_question(const std::string& key) {
    Rng rng(fnv1a64(key));
    return "q" + hex16(rng.next()) + " r" + hex16(rng.next()) + " s" +
           hex16(rng.next()) + "?";
}

nlohmann::json capability_names(CapabilityMask mask) {
    nlohmann::json names = nlohmann::json::array();
    for (Capability c : mask_members(mask)) names.push_back(std::string(to_string(c)));
    return names;
}

CapabilityMask parse_identified(const nlohmann::json& record) {
    CapabilityMask mask = 0;
    for (const auto& item : record.at("identified")) {
        mask |= mask_of(parse_capability(item.get<std::string>()));
    }
    return mask;
}

}  // namespace

MockPolicy parse_mock_policy(const std::string& name) {
    if (name == "error") return MockPolicy::error;
    if (name == "accept") return MockPolicy::accept;
    if (name == "reject_capability") return MockPolicy::reject_capability;
    throw std::invalid_argument("unknown mock policy: " + name);
}

std::string MockBackend::gen_key(const std::string& image_id,
                                 const std::string& combo_key, int attempt_index) {
    return image_id + "|" + combo_key + "|" + std::to_string(attempt_index);
}

void MockBackend::load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read fixture: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("fixture " + path + " line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (record.contains("image_id")) {
            GenRecord gen;
            if (record.contains("raw_reply")) {
                gen.raw_reply = record.at("raw_reply").get<std::string>();
            } else {
                gen.question = record.at("question").get<std::string>();
                gen.answer = record.at("answer").get<std::string>();
                gen.confidence = record.at("confidence").get<int>();
            }
            const CapabilityMask combo =
                parse_mask_key(record.at("combination").get<std::string>());
            // Records without attempt_index match any attempt of the combination.
            const int attempt = record.value("attempt_index", -1);
            generation_[gen_key(record.at("image_id").get<std::string>(),
                                mask_key(combo), attempt)] = gen;
            if (record.contains("identified") && !gen.question.empty()) {
                analysis_[gen.question] = AnalysisRecord{parse_identified(record), {}};
            }
        } else if (record.contains("question")) {
            AnalysisRecord analysis;
            if (record.contains("raw_reply")) {
                analysis.raw_reply = record.at("raw_reply").get<std::string>();
            } else {
                analysis.identified = parse_identified(record);
            }
            analysis_[record.at("question").get<std::string>()] = analysis;
        } else {
            throw std::runtime_error("fixture " + path + " line " +
                                     std::to_string(line_no) +
                                     ": record needs image_id or question");
        }
    }
}

void MockBackend::add_generation_record(const std::string& image_id,
                                        CapabilityMask combination, int attempt_index,
                                        std::string question, std::string answer,
                                        int confidence) {
    generation_[gen_key(image_id, mask_key(combination), attempt_index)] =
        GenRecord{std::move(question), std::move(answer), confidence, {}};
}

void MockBackend::add_generation_raw_reply(const std::string& image_id,
                                           CapabilityMask combination, int attempt_index,
                                           std::string raw_reply) {
    generation_[gen_key(image_id, mask_key(combination), attempt_index)] =
        GenRecord{{}, {}, 0, std::move(raw_reply)};
}

void MockBackend::add_analysis_record(const std::string& question,
                                      CapabilityMask identified) {
    analysis_[question] = AnalysisRecord{identified, {}};
}

void MockBackend::add_analysis_raw_reply(const std::string& question,
                                         std::string raw_reply) {
    analysis_[question] = AnalysisRecord{0, std::move(raw_reply)};
}

CompletionResponse MockBackend::respond(std::string text) const {
    CompletionResponse response;
    response.text = std::move(text);
    if (report_usage_) {
        response.usage = TokenUsage{500, 200, true};
    }
    return response;
}

CompletionResponse MockBackend::complete_generation(
    const CompletionRequest& request) const {
    const std::string key =
        gen_key(request.image_id, request.combination_key, request.attempt_index);
    auto it = generation_.find(key);
    if (it == generation_.end()) {
        it = generation_.find(gen_key(request.image_id, request.combination_key, -1));
    }
    if (it != generation_.end()) {
        const GenRecord& record = it->second;
        if (record.raw_reply) return respond(*record.raw_reply);
        nlohmann::json reply{{"question", record.question},
                             {"answer", record.answer},
                             {"confidence", record.confidence}};
        return respond(reply.dump());
    }
    if (policy_ == MockPolicy::error) {
        throw std::out_of_range("mock: no generation record for key " + key);
    }
    nlohmann::json reply{{"question", synth_question(key)},
                         {"answer", "blue"},
                         {"confidence", 92}};
    return respond(reply.dump());
}

CompletionResponse MockBackend::complete_capability_list(
    const CompletionRequest& request) const {
    if (auto it = analysis_.find(request.question); it != analysis_.end()) {
        if (it->second.raw_reply) return respond(*it->second.raw_reply);
        return respond(capability_names(it->second.identified).dump());
    }
    if (policy_ == MockPolicy::error) {
        throw std::out_of_range("mock: no analysis record for question: " +
                                request.question);
    }
    CapabilityMask requested = request.combination_key.empty()
                                   ? mask_of(Capability::object_recognition)
                                   : parse_mask_key(request.combination_key);
    if (policy_ == MockPolicy::reject_capability) {
        // Drop the last requested capability so the verdict cannot match.
        auto members = mask_members(requested);
        requested &= static_cast<CapabilityMask>(~mask_of(members.back()));
    }
    return respond(capability_names(requested).dump());
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
    switch (request.kind) {
        case RequestKind::generation:
            return complete_generation(request);
        case RequestKind::analysis:
        case RequestKind::verification:
            return complete_capability_list(request);
    }
    throw std::logic_error("mock: unknown request kind");
}

}  // namespace compact
