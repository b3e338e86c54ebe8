#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "compact/genclient.hpp"

namespace compact {

struct VerifierThresholds {
    int confidence = 70;    // candidates below this are rejected
    double overlap = 0.60;  // candidates sharing strictly more than this are rejected
    std::vector<std::string> uninformative = {"unknown", "not visible", "none",
                                              "yes",     "no",          "n/a"};

    void validate() const;
};

// Fraction of the candidate question's unique words also present in the
// accepted question. Both sides are lowercased, stripped of punctuation and
// split on whitespace; the denominator is the candidate's unique-word count.
double overlap(const std::string& candidate_question,
               const std::string& accepted_question);

struct AcceptedConversation {
    std::string image_id;
    CapabilityMask requested = 0;
    int k_gen = 0;
    std::string question;
    std::string answer;
    int confidence = 0;
    CapabilityMask identified = 0;
    int k_final = 0;  // |identified|
    int attempt_index = 0;
};

enum class RejectionMode {
    low_confidence,
    uninformative_answer,
    high_overlap,
    capability_mismatch,
};

std::string_view to_string(RejectionMode mode);
RejectionMode parse_rejection_mode(const std::string& name);

struct RejectionRecord {
    ConversationCandidate candidate;
    RejectionMode mode;
    std::string detail;
};

using CheckResult = std::variant<AcceptedConversation, RejectionRecord>;

// Applies the filter chain in fixed order (uninformative answer, low
// confidence, overlap against previously accepted questions for the image,
// capability mismatch) and returns the accepted conversation or the first
// rejection. Rejection is a value, not an error.
CheckResult check(const ConversationCandidate& candidate,
                  const CapabilityVerdict& verdict,
                  std::span<const AcceptedConversation> accepted_so_far,
                  const VerifierThresholds& thresholds);

struct YieldReport {
    long attempts = 0;
    long accepted = 0;
    long rejected = 0;
    double rejection_rate = 0.0;
    std::map<RejectionMode, long> mode_counts;
    std::map<RejectionMode, double> mode_shares;  // empty when rejected == 0

    std::string to_json_string() const;
    std::string to_text() const;
};

YieldReport yield_report(std::span<const RejectionRecord> ledger, long accepted_count);

// Ledger persistence: one rejection per JSONL line.
std::string rejection_to_jsonl(const RejectionRecord& record);
RejectionRecord rejection_from_jsonl(const std::string& line);
std::vector<RejectionRecord> load_ledger(const std::string& path);

}  // namespace compact
