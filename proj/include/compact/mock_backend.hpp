#pragma once

#include <optional>
#include <string>
#include <unordered_map>

#include "compact/genclient.hpp"
#include "compact/taxonomy.hpp"

namespace compact {

// What the mock does for a key with no fixture record.
//   error:             throw (missing fixtures are test bugs)
//   accept:            synthesize a passing candidate; verification echoes the
//                      requested capabilities
//   reject_capability: same candidate, but verification drops one requested
//                      capability so the match filter fires
enum class MockPolicy { error, accept, reject_capability };

MockPolicy parse_mock_policy(const std::string& name);

// Deterministic generator double. Replays scripted records keyed by
// (image_id, combination, attempt_index) for generation and by question text
// for analysis/verification; unscripted keys fall back to the policy.
// Identical fixtures and inputs yield bit-identical replies.
class MockBackend : public Backend {
public:
    explicit MockBackend(MockPolicy policy = MockPolicy::error) : policy_(policy) {}

    // JSONL fixture, one record per line:
    //   {"image_id": "...", "combination": "color+counting", "attempt_index": 0,
    //    "question": "...", "answer": "...", "confidence": 92,
    //    "identified": ["color", "counting"], "raw_reply": "..."}
    // Records with only question/identified script analysis and verification.
    // raw_reply, when present, is returned verbatim (for parser-failure tests).
    void load_fixture(const std::string& path);

    void add_generation_record(const std::string& image_id, CapabilityMask combination,
                               int attempt_index, std::string question,
                               std::string answer, int confidence);
    void add_generation_raw_reply(const std::string& image_id,
                                  CapabilityMask combination, int attempt_index,
                                  std::string raw_reply);
    void add_analysis_record(const std::string& question, CapabilityMask identified);
    void add_analysis_raw_reply(const std::string& question, std::string raw_reply);

    // When set, replies carry metered token usage (fixed per-call numbers).
    void set_report_usage(bool enabled) { report_usage_ = enabled; }
    void set_policy(MockPolicy policy) { policy_ = policy; }

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "mock"; }

private:
    struct GenRecord {
        std::string question;
        std::string answer;
        int confidence = 0;
        std::optional<std::string> raw_reply;
    };
    struct AnalysisRecord {
        CapabilityMask identified = 0;
        std::optional<std::string> raw_reply;
    };

    static std::string gen_key(const std::string& image_id, const std::string& combo_key,
                               int attempt_index);

    CompletionResponse respond(std::string text) const;
    CompletionResponse complete_generation(const CompletionRequest& request) const;
    CompletionResponse complete_capability_list(const CompletionRequest& request) const;

    MockPolicy policy_;
    bool report_usage_ = false;
    std::unordered_map<std::string, GenRecord> generation_;
    std::unordered_map<std::string, AnalysisRecord> analysis_;
};

}  // namespace compact
