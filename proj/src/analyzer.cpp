#include "compact/analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "compact/log.hpp"
#include "compact/rng.hpp"

namespace compact {

namespace {

constexpr std::string_view kImageToken = "<image>";

std::string strip_image_token(std::string text) {
    std::size_t pos;
    while ((pos = text.find(kImageToken)) != std::string::npos) {
        text.erase(pos, kImageToken.size());
    }
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

struct Moments {
    long n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sum_sq += x * x;
    }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    double stddev() const {
        if (n == 0) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - m * m));
    }
};

}  // namespace

void KProfile::recompute() {
    histogram.fill(0);
    total_questions = static_cast<long>(questions.size());
    double k_sum = 0.0;
    for (const QuestionProfile& q : questions) {
        const int k = mask_size(q.capabilities);
        ++histogram[static_cast<std::size_t>(k)];
        k_sum += k;
    }
    mean_k = total_questions > 0 ? k_sum / static_cast<double>(total_questions) : 0.0;
    mode_k = 0;
    long best = -1;
    for (int k = 0; k <= kCapabilityCount; ++k) {
        if (histogram[static_cast<std::size_t>(k)] > best) {
            best = histogram[static_cast<std::size_t>(k)];
            mode_k = k;
        }
    }
    if (total_questions > 0) {
        const long le2 = histogram[0] + histogram[1] + histogram[2];
        share_k_le2 = static_cast<double>(le2) / static_cast<double>(total_questions);
        share_k0 = static_cast<double>(histogram[0]) /
                   static_cast<double>(total_questions);
    } else {
        share_k_le2 = share_k0 = 0.0;
    }
}

nlohmann::json KProfile::to_json() const {
    nlohmann::json j;
    j["total_questions"] = total_questions;
    j["skipped"] = skipped;
    j["mean_k"] = mean_k;
    j["mode_k"] = mode_k;
    j["share_k_le2"] = share_k_le2;
    j["share_k0"] = share_k0;
    j["histogram"] = nlohmann::json::object();
    for (int k = 0; k <= kCapabilityCount; ++k) {
        j["histogram"][std::to_string(k)] = histogram[static_cast<std::size_t>(k)];
    }
    return j;
}

KProfile profile_from_annotations(std::vector<QuestionProfile> questions) {
    KProfile profile;
    profile.questions = std::move(questions);
    profile.recompute();
    return profile;
}

KProfile profile_k(const std::vector<DatasetEntry>& dataset, GenClient& client,
                   std::size_t sample_images, std::uint64_t seed) {
    if (dataset.empty()) throw std::invalid_argument("profile_k: dataset is empty");

    std::vector<std::size_t> indices;
    if (sample_images >= dataset.size()) {
        indices.resize(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) indices[i] = i;
    } else {
        Rng rng(seed);
        indices = rng.sample_indices(dataset.size(), sample_images);
        std::sort(indices.begin(), indices.end());
    }

    KProfile profile;
    for (std::size_t index : indices) {
        const DatasetEntry& entry = dataset[index];
        for (const Turn& turn : entry.conversations) {
            if (turn.from != "human") continue;
            const std::string question = strip_image_token(turn.value);
            if (question.empty()) continue;
            try {
                const CapabilityMask mask = client.analyze_capabilities(question);
                profile.questions.push_back({entry.id, question, mask});
            } catch (const MalformedReplyError& e) {
                ++profile.skipped;
                log_warn("analysis_skipped", {{"image", entry.id}, {"error", e.what()}});
            } catch (const TransportError& e) {
                ++profile.skipped;
                log_warn("analysis_skipped", {{"image", entry.id}, {"error", e.what()}});
            }
        }
    }
    profile.recompute();
    return profile;
}

nlohmann::json CapabilityFrequency::to_json() const {
    nlohmann::json j;
    j["total_questions"] = total_questions;
    j["counts"] = nlohmann::json::object();
    j["shares"] = nlohmann::json::object();
    for (const CapabilityInfo& info : all_capabilities()) {
        const auto i = static_cast<std::size_t>(info.id);
        j["counts"][std::string(info.name)] = counts[i];
        j["shares"][std::string(info.name)] = shares[i];
    }
    j["balance_defined"] = balance_defined;
    if (balance_defined) j["balance"] = balance;
    return j;
}

CapabilityFrequency capability_frequency(const KProfile& profile) {
    CapabilityFrequency freq;
    freq.total_questions = profile.total_questions;
    for (const QuestionProfile& q : profile.questions) {
        for (Capability c : mask_members(q.capabilities)) {
            ++freq.counts[static_cast<std::size_t>(c)];
        }
    }
    if (freq.total_questions > 0) {
        for (std::size_t i = 0; i < kCapabilityCount; ++i) {
            freq.shares[i] = static_cast<double>(freq.counts[i]) /
                             static_cast<double>(freq.total_questions);
        }
    }
    const auto [min_it, max_it] =
        std::minmax_element(freq.shares.begin(), freq.shares.end());
    freq.balance_defined = *min_it > 0.0;
    freq.balance = freq.balance_defined ? *max_it / *min_it : 0.0;
    return freq;
}

std::array<long, kCapabilityCount> capability_inflation(
    std::span<const CapabilityMask> requested,
    std::span<const CapabilityMask> identified) {
    if (requested.size() != identified.size()) {
        throw std::invalid_argument(
            "capability_inflation: requested/identified must pair up");
    }
    std::array<long, kCapabilityCount> inflation{};
    for (std::size_t i = 0; i < requested.size(); ++i) {
        const CapabilityMask extra =
            static_cast<CapabilityMask>(identified[i] & ~requested[i]);
        for (Capability c : mask_members(extra)) {
            ++inflation[static_cast<std::size_t>(c)];
        }
    }
    return inflation;
}

nlohmann::json CooccurrenceMatrix::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const CapabilityInfo& row : all_capabilities()) {
        nlohmann::json row_json = nlohmann::json::object();
        for (const CapabilityInfo& col : all_capabilities()) {
            const auto& cell = phi[static_cast<std::size_t>(row.id)]
                                  [static_cast<std::size_t>(col.id)];
            row_json[std::string(col.name)] =
                cell ? nlohmann::json(*cell) : nlohmann::json();
        }
        j[std::string(row.name)] = std::move(row_json);
    }
    return j;
}

CooccurrenceMatrix cooccurrence(const KProfile& profile) {
    const long n = profile.total_questions;
    if (n < 2) throw std::invalid_argument("cooccurrence: need at least 2 questions");

    std::array<long, kCapabilityCount> ones{};
    std::array<std::array<long, kCapabilityCount>, kCapabilityCount> both{};
    for (const QuestionProfile& q : profile.questions) {
        const auto members = mask_members(q.capabilities);
        for (Capability a : members) {
            ++ones[static_cast<std::size_t>(a)];
            for (Capability b : members) {
                if (a < b) {
                    ++both[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                }
            }
        }
    }

    CooccurrenceMatrix matrix;
    for (std::size_t a = 0; a < kCapabilityCount; ++a) {
        for (std::size_t b = a; b < kCapabilityCount; ++b) {
            const long n1a = ones[a];
            const long n1b = ones[b];
            const bool defined = n1a > 0 && n1a < n && n1b > 0 && n1b < n;
            if (!defined) continue;
            if (a == b) {
                matrix.phi[a][a] = 1.0;
                continue;
            }
            const long n11 = both[a][b];
            const long n10 = n1a - n11;
            const long n01 = n1b - n11;
            const long n00 = n - n11 - n10 - n01;
            const double denom = std::sqrt(static_cast<double>(n1a) *
                                           static_cast<double>(n - n1a) *
                                           static_cast<double>(n1b) *
                                           static_cast<double>(n - n1b));
            const double value =
                (static_cast<double>(n11) * static_cast<double>(n00) -
                 static_cast<double>(n10) * static_cast<double>(n01)) /
                denom;
            matrix.phi[a][b] = value;
            matrix.phi[b][a] = value;
        }
    }
    return matrix;
}

nlohmann::json ConversationsPerImage::to_json() const {
    nlohmann::json j;
    j["images"] = images;
    j["malformed"] = malformed;
    j["total_pairs"] = total_pairs;
    j["mean"] = mean;
    j["stddev"] = stddev;
    j["share_le20"] = share_le20;
    j["histogram"] = nlohmann::json::object();
    for (const auto& [pairs, count] : histogram) {
        j["histogram"][std::to_string(pairs)] = count;
    }
    return j;
}

ConversationsPerImage conversations_per_image(const std::vector<DatasetEntry>& dataset) {
    ConversationsPerImage stats;
    Moments moments;
    long le20 = 0;
    for (const DatasetEntry& entry : dataset) {
        if (entry.conversations.empty() || entry.conversations.size() % 2 != 0) {
            ++stats.malformed;
            continue;
        }
        const int pairs = static_cast<int>(entry.conversations.size() / 2);
        ++stats.images;
        stats.total_pairs += pairs;
        ++stats.histogram[pairs];
        if (pairs <= 20) ++le20;
        moments.add(pairs);
    }
    stats.mean = moments.mean();
    stats.stddev = moments.stddev();
    stats.share_le20 = stats.images > 0
                           ? static_cast<double>(le20) / static_cast<double>(stats.images)
                           : 0.0;
    return stats;
}

long default_tokenizer(const std::string& text) {
    long count = 0;
    bool in_token = false;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || std::ispunct(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

nlohmann::json TokenStats::to_json() const {
    nlohmann::json j;
    j["entries"] = entries;
    j["turn_pairs"] = turn_pairs;
    j["input_mean"] = input_mean;
    j["input_stddev"] = input_stddev;
    j["output_mean"] = output_mean;
    j["output_stddev"] = output_stddev;
    j["tokens_per_pair"] = tokens_per_pair;
    j["tokens_per_entry"] = tokens_per_entry;
    j["corpus_tokens"] = corpus_tokens;
    return j;
}

TokenStats token_stats(const std::vector<DatasetEntry>& dataset,
                       const Tokenizer& tokenizer) {
    TokenStats stats;
    Moments input;
    Moments output;
    for (const DatasetEntry& entry : dataset) {
        ++stats.entries;
        for (const Turn& turn : entry.conversations) {
            const long tokens = tokenizer(strip_image_token(turn.value));
            stats.corpus_tokens += tokens;
            if (turn.from == "human") {
                input.add(static_cast<double>(tokens));
            } else {
                output.add(static_cast<double>(tokens));
            }
        }
    }
    stats.turn_pairs = std::min(input.n, output.n);
    stats.input_mean = input.mean();
    stats.input_stddev = input.stddev();
    stats.output_mean = output.mean();
    stats.output_stddev = output.stddev();
    stats.tokens_per_pair =
        stats.turn_pairs > 0
            ? (input.sum + output.sum) / static_cast<double>(stats.turn_pairs)
            : 0.0;
    stats.tokens_per_entry =
        stats.entries > 0
            ? static_cast<double>(stats.corpus_tokens) / static_cast<double>(stats.entries)
            : 0.0;
    return stats;
}

double token_reduction_percent(const TokenStats& ours, const TokenStats& reference) {
    if (!(reference.tokens_per_entry > 0.0)) {
        throw std::invalid_argument("token_reduction_percent: reference has no tokens");
    }
    return (reference.tokens_per_entry - ours.tokens_per_entry) /
           reference.tokens_per_entry * 100.0;
}

DistributionProfile extract_profile(const KProfile& profile) {
    DistributionProfile out;
    for (const QuestionProfile& q : profile.questions) {
        const int k = mask_size(q.capabilities);
        if (k < 1 || k > 3) continue;  // outside the generable range
        out.combination_weights[q.capabilities] += 1.0;
        out.k_weights[k] += 1.0;
    }
    if (out.combination_weights.empty()) {
        throw std::invalid_argument(
            "extract_profile: no questions with 1-3 capabilities");
    }
    out.normalize();
    return out;
}

}  // namespace compact
