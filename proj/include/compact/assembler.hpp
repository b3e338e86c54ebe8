#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "compact/verifier.hpp"

namespace compact {

struct Turn {
    std::string from;  // "human" | "gpt"
    std::string value;
};

// One image with its conversation turns, LLaVA interchange layout.
struct DatasetEntry {
    std::string id;
    std::string image;  // relative path
    std::vector<Turn> conversations;
    std::string source;  // "compositional" | "vit_subset"

    nlohmann::json to_json() const;
    static DatasetEntry from_json(const nlohmann::json& j);
};

// Turns alternate human/gpt starting with human; exactly the first human
// turn carries the "<image>" placeholder. Throws std::invalid_argument.
void validate_entry(const DatasetEntry& entry);

// Accepted conversations of one image, in canonical (k_gen, acceptance) order.
struct AcceptedGroup {
    std::string image_id;
    std::string image_path;
    std::vector<AcceptedConversation> accepted;
};

struct ToEntriesResult {
    std::vector<DatasetEntry> entries;
    long skipped_empty = 0;  // images with zero accepted conversations
};

// One entry per nonempty group; each accepted Q/A becomes a human/gpt pair.
ToEntriesResult to_entries(std::span<const AcceptedGroup> groups);

struct MixSpec {
    double vit_fraction = 0.05;
    std::uint64_t seed = 0;
};

struct MixResult {
    std::vector<DatasetEntry> entries;
    nlohmann::json manifest;  // exact counts, fraction, seed
};

// Samples floor(fraction * |vit_pool|) entries without replacement, tags them
// vit_subset, concatenates with the compositional entries and shuffles, all
// driven by spec.seed.
MixResult mix(std::vector<DatasetEntry> compositional,
              const std::vector<DatasetEntry>& vit_pool, const MixSpec& spec);

// Reads a JSON array or JSONL file of entries (sniffs the first byte).
std::vector<DatasetEntry> load_entries(const std::string& path);

std::string entries_to_jsonl(std::span<const DatasetEntry> entries);
void write_entries_jsonl(const std::string& path, std::span<const DatasetEntry> entries);

}  // namespace compact
