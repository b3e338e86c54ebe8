#include "compact/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace compact {

namespace {

std::string fold(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    // trim
    std::size_t begin = out.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    std::size_t end = out.find_last_not_of(" \t\r\n");
    return out.substr(begin, end - begin + 1);
}

std::set<std::string> unique_words(const std::string& text) {
    std::set<std::string> words;
    std::string current;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || std::ispunct(c)) {
            if (!current.empty()) {
                words.insert(current);
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) words.insert(current);
    return words;
}

std::string format_ratio(double value) {
    std::ostringstream out;
    out.precision(4);
    out << value;
    return out.str();
}

}  // namespace

void VerifierThresholds::validate() const {
    if (confidence < 0 || confidence > 100) {
        throw std::invalid_argument("thresholds.confidence must be in [0, 100]");
    }
    if (overlap < 0.0 || overlap > 1.0) {
        throw std::invalid_argument("thresholds.overlap must be in [0, 1]");
    }
}

double overlap(const std::string& candidate_question,
               const std::string& accepted_question) {
    const std::set<std::string> candidate = unique_words(candidate_question);
    if (candidate.empty()) return 0.0;
    const std::set<std::string> accepted = unique_words(accepted_question);
    std::size_t shared = 0;
    for (const std::string& word : candidate) {
        if (accepted.count(word)) ++shared;
    }
    return static_cast<double>(shared) / static_cast<double>(candidate.size());
}

std::string_view to_string(RejectionMode mode) {
    switch (mode) {
        case RejectionMode::low_confidence: return "low_confidence";
        case RejectionMode::uninformative_answer: return "uninformative_answer";
        case RejectionMode::high_overlap: return "high_overlap";
        case RejectionMode::capability_mismatch: return "capability_mismatch";
    }
    return "?";
}

RejectionMode parse_rejection_mode(const std::string& name) {
    for (RejectionMode mode :
         {RejectionMode::low_confidence, RejectionMode::uninformative_answer,
          RejectionMode::high_overlap, RejectionMode::capability_mismatch}) {
        if (name == to_string(mode)) return mode;
    }
    throw std::invalid_argument("unknown rejection mode: " + name);
}

CheckResult check(const ConversationCandidate& candidate,
                  const CapabilityVerdict& verdict,
                  std::span<const AcceptedConversation> accepted_so_far,
                  const VerifierThresholds& thresholds) {
    thresholds.validate();

    const std::string folded_answer = fold(candidate.answer);
    for (const std::string& bad : thresholds.uninformative) {
        if (folded_answer == fold(bad)) {
            return RejectionRecord{candidate, RejectionMode::uninformative_answer,
                                   "answer \"" + candidate.answer + "\""};
        }
    }

    if (candidate.confidence < thresholds.confidence) {
        return RejectionRecord{candidate, RejectionMode::low_confidence,
                               "confidence " + std::to_string(candidate.confidence) +
                                   " < " + std::to_string(thresholds.confidence)};
    }

    double worst = 0.0;
    for (const AcceptedConversation& prior : accepted_so_far) {
        worst = std::max(worst, overlap(candidate.question, prior.question));
    }
    if (worst > thresholds.overlap) {
        return RejectionRecord{candidate, RejectionMode::high_overlap,
                               format_ratio(worst)};
    }

    if (!verdict.matched) {
        return RejectionRecord{candidate, RejectionMode::capability_mismatch,
                               "identified [" + mask_key(verdict.identified) +
                                   "] vs requested [" + candidate.requested.key() + "]"};
    }

    AcceptedConversation accepted;
    accepted.image_id = candidate.image_id;
    accepted.requested = candidate.requested.mask();
    accepted.k_gen = candidate.requested.k_gen();
    accepted.question = candidate.question;
    accepted.answer = candidate.answer;
    accepted.confidence = candidate.confidence;
    accepted.identified = verdict.identified;
    accepted.k_final = mask_size(verdict.identified);
    accepted.attempt_index = candidate.attempt_index;
    return accepted;
}

YieldReport yield_report(std::span<const RejectionRecord> ledger, long accepted_count) {
    YieldReport report;
    report.accepted = accepted_count;
    report.rejected = static_cast<long>(ledger.size());
    report.attempts = report.accepted + report.rejected;
    report.rejection_rate =
        report.attempts > 0
            ? static_cast<double>(report.rejected) / static_cast<double>(report.attempts)
            : 0.0;
    for (const RejectionRecord& record : ledger) ++report.mode_counts[record.mode];
    if (report.rejected > 0) {
        for (const auto& [mode, count] : report.mode_counts) {
            report.mode_shares[mode] =
                static_cast<double>(count) / static_cast<double>(report.rejected);
        }
    }
    return report;
}

std::string YieldReport::to_json_string() const {
    nlohmann::json j;
    j["attempts"] = attempts;
    j["accepted"] = accepted;
    j["rejected"] = rejected;
    j["rejection_rate"] = rejection_rate;
    j["mode_counts"] = nlohmann::json::object();
    j["mode_shares"] = nlohmann::json::object();
    for (const auto& [mode, count] : mode_counts) {
        j["mode_counts"][std::string(to_string(mode))] = count;
    }
    for (const auto& [mode, share] : mode_shares) {
        j["mode_shares"][std::string(to_string(mode))] = share;
    }
    return j.dump(2);
}

std::string YieldReport::to_text() const {
    std::ostringstream out;
    out << "attempts:       " << attempts << '\n';
    out << "accepted:       " << accepted << '\n';
    out << "rejected:       " << rejected << '\n';
    out << "rejection rate: " << format_ratio(rejection_rate) << '\n';
    for (const auto& [mode, count] : mode_counts) {
        out << "  " << to_string(mode) << ": " << count;
        if (auto it = mode_shares.find(mode); it != mode_shares.end()) {
            out << " (" << format_ratio(it->second) << " of rejections)";
        }
        out << '\n';
    }
    return out.str();
}

std::string rejection_to_jsonl(const RejectionRecord& record) {
    nlohmann::json j;
    j["image_id"] = record.candidate.image_id;
    j["combination"] = record.candidate.requested.key();
    j["k_gen"] = record.candidate.requested.k_gen();
    j["attempt_index"] = record.candidate.attempt_index;
    j["question"] = record.candidate.question;
    j["answer"] = record.candidate.answer;
    j["confidence"] = record.candidate.confidence;
    j["mode"] = std::string(to_string(record.mode));
    j["detail"] = record.detail;
    return j.dump();
}

RejectionRecord rejection_from_jsonl(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    ConversationCandidate candidate{
        j.at("image_id").get<std::string>(),
        Combination(parse_mask_key(j.at("combination").get<std::string>())),
        j.at("question").get<std::string>(),
        j.at("answer").get<std::string>(),
        j.at("confidence").get<int>(),
        j.at("attempt_index").get<int>()};
    return RejectionRecord{std::move(candidate),
                           parse_rejection_mode(j.at("mode").get<std::string>()),
                           j.value("detail", std::string())};
}

std::vector<RejectionRecord> load_ledger(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read ledger: " + path);
    std::vector<RejectionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        records.push_back(rejection_from_jsonl(line));
    }
    return records;
}

}  // namespace compact
