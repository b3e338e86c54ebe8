#include "compact/assembler.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "compact/io_util.hpp"
#include "compact/log.hpp"
#include "compact/rng.hpp"

namespace compact {

namespace {
constexpr std::string_view kImageToken = "<image>";
}

nlohmann::json DatasetEntry::to_json() const {
    nlohmann::json turns = nlohmann::json::array();
    for (const Turn& turn : conversations) {
        turns.push_back({{"from", turn.from}, {"value", turn.value}});
    }
    return {{"id", id}, {"image", image}, {"conversations", turns}, {"source", source}};
}

DatasetEntry DatasetEntry::from_json(const nlohmann::json& j) {
    DatasetEntry entry;
    entry.id = j.at("id").get<std::string>();
    entry.image = j.value("image", std::string());
    for (const auto& turn : j.at("conversations")) {
        entry.conversations.push_back(
            {turn.at("from").get<std::string>(), turn.at("value").get<std::string>()});
    }
    entry.source = j.value("source", std::string());
    return entry;
}

void validate_entry(const DatasetEntry& entry) {
    if (entry.conversations.empty() || entry.conversations.size() % 2 != 0) {
        throw std::invalid_argument("entry " + entry.id +
                                    ": turns must be nonempty human/gpt pairs");
    }
    for (std::size_t i = 0; i < entry.conversations.size(); ++i) {
        const std::string& from = entry.conversations[i].from;
        const std::string& expected = i % 2 == 0 ? "human" : "gpt";
        if (from != expected) {
            throw std::invalid_argument("entry " + entry.id + ": turn " +
                                        std::to_string(i) + " must be from " + expected);
        }
    }
    long placeholders = 0;
    for (std::size_t i = 0; i < entry.conversations.size(); ++i) {
        if (entry.conversations[i].value.find(kImageToken) != std::string::npos) {
            if (i != 0) {
                throw std::invalid_argument("entry " + entry.id +
                                            ": image placeholder outside first turn");
            }
            ++placeholders;
        }
    }
    if (placeholders != 1) {
        throw std::invalid_argument(
            "entry " + entry.id + ": exactly the first human turn must carry " +
            std::string(kImageToken));
    }
}

ToEntriesResult to_entries(std::span<const AcceptedGroup> groups) {
    ToEntriesResult result;
    for (const AcceptedGroup& group : groups) {
        if (group.accepted.empty()) {
            log_warn("empty_image_skipped", {{"image", group.image_id}});
            ++result.skipped_empty;
            continue;
        }
        DatasetEntry entry;
        entry.id = group.image_id;
        entry.image = group.image_path;
        entry.source = "compositional";
        bool first = true;
        for (const AcceptedConversation& conv : group.accepted) {
            std::string question = conv.question;
            if (first) {
                question = std::string(kImageToken) + "\n" + question;
                first = false;
            }
            entry.conversations.push_back({"human", std::move(question)});
            entry.conversations.push_back({"gpt", conv.answer});
        }
        validate_entry(entry);
        result.entries.push_back(std::move(entry));
    }
    return result;
}

MixResult mix(std::vector<DatasetEntry> compositional,
              const std::vector<DatasetEntry>& vit_pool, const MixSpec& spec) {
    if (spec.vit_fraction < 0.0 || spec.vit_fraction > 1.0) {
        throw std::invalid_argument("mix: vit_fraction must be in [0, 1]");
    }
    const auto subset_size = static_cast<std::size_t>(
        std::floor(spec.vit_fraction * static_cast<double>(vit_pool.size())));
    if (spec.vit_fraction > 0.0 && subset_size == 0) {
        throw std::invalid_argument(
            "mix: vit_fraction * pool size is below one entry; use fraction 0 to skip "
            "the instruction-tuning subset");
    }
    if (compositional.empty() && subset_size == 0) {
        throw std::invalid_argument("mix: output would be empty");
    }

    for (DatasetEntry& entry : compositional) {
        if (entry.source.empty()) entry.source = "compositional";
    }

    Rng rng(spec.seed);
    MixResult result;
    result.entries = std::move(compositional);
    const std::size_t compositional_count = result.entries.size();
    for (std::size_t index : rng.sample_indices(vit_pool.size(), subset_size)) {
        DatasetEntry entry = vit_pool[index];
        entry.source = "vit_subset";
        result.entries.push_back(std::move(entry));
    }
    rng.shuffle(result.entries);

    result.manifest = {
        {"compositional_count", compositional_count},
        {"vit_subset_count", subset_size},
        {"total_count", result.entries.size()},
        {"vit_pool_size", vit_pool.size()},
        {"vit_fraction", spec.vit_fraction},
        {"shuffle_seed", spec.seed},
    };
    return result;
}

std::vector<DatasetEntry> load_entries(const std::string& path) {
    const std::string content = read_file(path);
    std::vector<DatasetEntry> entries;
    const std::size_t first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return entries;
    if (content[first] == '[') {
        for (const auto& j : nlohmann::json::parse(content)) {
            entries.push_back(DatasetEntry::from_json(j));
        }
        return entries;
    }
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            entries.push_back(DatasetEntry::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return entries;
}

std::string entries_to_jsonl(std::span<const DatasetEntry> entries) {
    std::string out;
    for (const DatasetEntry& entry : entries) {
        out += entry.to_json().dump();
        out += '\n';
    }
    return out;
}

void write_entries_jsonl(const std::string& path,
                         std::span<const DatasetEntry> entries) {
    write_file_atomic(path, entries_to_jsonl(entries));
}

}  // namespace compact
