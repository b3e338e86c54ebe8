#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "compact/assembler.hpp"
#include "compact/genclient.hpp"
#include "compact/sampler.hpp"
#include "compact/taxonomy.hpp"

namespace compact {

struct QuestionProfile {
    std::string image_id;
    std::string question;
    CapabilityMask capabilities = 0;
};

// Complexity profile of a question sample: per-question capability sets plus
// the k histogram and its summary statistics.
struct KProfile {
    std::vector<QuestionProfile> questions;
    std::array<long, kCapabilityCount + 1> histogram{};  // index = k, 0..10
    long total_questions = 0;
    long skipped = 0;  // questions whose analysis call failed
    double mean_k = 0.0;
    int mode_k = 0;  // smallest k on ties
    double share_k_le2 = 0.0;
    double share_k0 = 0.0;

    // Rebuilds histogram and summary fields from `questions`.
    void recompute();

    nlohmann::json to_json() const;
};

// Samples `sample_images` images uniformly without replacement (seeded),
// analyzes every human-turn question of the sampled entries through the
// backend and aggregates. The "<image>" placeholder is stripped before
// analysis. Failed analysis calls skip the question and bump `skipped`.
KProfile profile_k(const std::vector<DatasetEntry>& dataset, GenClient& client,
                   std::size_t sample_images, std::uint64_t seed);

// Aggregates an already-annotated question sample (oracle and fixture path).
KProfile profile_from_annotations(std::vector<QuestionProfile> questions);

struct CapabilityFrequency {
    std::array<long, kCapabilityCount> counts{};
    std::array<double, kCapabilityCount> shares{};  // of questions containing each
    long total_questions = 0;
    bool balance_defined = false;  // false when some capability never occurs
    double balance = 0.0;          // max share / min share

    nlohmann::json to_json() const;
};

CapabilityFrequency capability_frequency(const KProfile& profile);

// Per-capability count of appearances in `identified` but not in `requested`.
// Throws std::invalid_argument when the spans differ in length.
std::array<long, kCapabilityCount> capability_inflation(
    std::span<const CapabilityMask> requested, std::span<const CapabilityMask> identified);

// Pairwise phi coefficients between capability indicator variables.
// Entries are empty where either capability has zero variance.
struct CooccurrenceMatrix {
    std::array<std::array<std::optional<double>, kCapabilityCount>, kCapabilityCount>
        phi{};

    nlohmann::json to_json() const;
};

// Requires at least two questions.
CooccurrenceMatrix cooccurrence(const KProfile& profile);

struct ConversationsPerImage {
    long images = 0;
    long malformed = 0;  // entries with odd or missing turns, skipped
    long total_pairs = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::map<int, long> histogram;
    double share_le20 = 0.0;

    nlohmann::json to_json() const;
};

ConversationsPerImage conversations_per_image(const std::vector<DatasetEntry>& dataset);

// Token counting hook; the default splits on whitespace and punctuation.
using Tokenizer = std::function<long(const std::string&)>;
long default_tokenizer(const std::string& text);

struct TokenStats {
    long entries = 0;
    long turn_pairs = 0;
    double input_mean = 0.0;  // human turns
    double input_stddev = 0.0;
    double output_mean = 0.0;  // gpt turns
    double output_stddev = 0.0;
    double tokens_per_pair = 0.0;
    double tokens_per_entry = 0.0;
    long corpus_tokens = 0;

    nlohmann::json to_json() const;
};

// "<image>" placeholders are structural and excluded from counts.
TokenStats token_stats(const std::vector<DatasetEntry>& dataset,
                       const Tokenizer& tokenizer = default_tokenizer);

// Percentage reduction of per-entry token totals of `ours` vs `reference`.
double token_reduction_percent(const TokenStats& ours, const TokenStats& reference);

// Turns a reference profile into sampling weights over k in [1, 3] and the
// observed combinations of those sizes (renormalized over that support).
// Throws std::invalid_argument when no question has k in [1, 3].
DistributionProfile extract_profile(const KProfile& profile);

}  // namespace compact
