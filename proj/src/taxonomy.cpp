#include "compact/taxonomy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

namespace compact {

namespace {

constexpr std::array<CapabilityInfo, kCapabilityCount> kCapabilities = {{
    {Capability::color, CapabilityGroup::attribution, "color",
     "Identifying or comparing colors of objects in the image",
     "What color is the car?"},
    {Capability::shape, CapabilityGroup::attribution, "shape",
     "Recognizing and describing the shapes of objects in the image",
     "What shape is the dining table?"},
    {Capability::object_recognition, CapabilityGroup::recognition, "object_recognition",
     "Identifying and naming objects present in the image",
     "What object is on the table?"},
    {Capability::action_recognition, CapabilityGroup::recognition, "action_recognition",
     "Identifying what action is being performed",
     "What is the person doing in this image?"},
    {Capability::text_recognition, CapabilityGroup::recognition, "text_recognition",
     "Reading and interpreting text visible in the image",
     "What word is written on the sign?"},
    {Capability::spatial_recognition, CapabilityGroup::recognition, "spatial_recognition",
     "Understanding the overall spatial layout and arrangement of the entire scene",
     "How is the furniture arranged in this room?"},
    {Capability::counting, CapabilityGroup::recognition, "counting",
     "Determining the number of instances of something in the image",
     "How many people are in the room?"},
    {Capability::spatial_relationship, CapabilityGroup::relation, "spatial_relationship",
     "Identifying how specific objects are positioned relative to each other",
     "What is next to the red car?"},
    {Capability::object_interaction, CapabilityGroup::relation, "object_interaction",
     "Analyzing how multiple objects interact with each other",
     "How is the woman interacting with the laptop?"},
    {Capability::scene_understanding, CapabilityGroup::relation, "scene_understanding",
     "Identifying the type of environment/setting",
     "Where is this scene taking place?"},
}};

std::string normalize_name(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t') {
            out.push_back('_');
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    // Trim leading/trailing separators.
    std::size_t begin = out.find_first_not_of('_');
    if (begin == std::string::npos) return {};
    std::size_t end = out.find_last_not_of('_');
    return out.substr(begin, end - begin + 1);
}

}  // namespace

std::span<const CapabilityInfo> all_capabilities() { return kCapabilities; }

const CapabilityInfo& capability_info(Capability id) {
    return kCapabilities[static_cast<std::size_t>(id)];
}

std::string_view to_string(Capability id) { return capability_info(id).name; }

std::string_view to_string(CapabilityGroup group) {
    switch (group) {
        case CapabilityGroup::attribution: return "attribution";
        case CapabilityGroup::recognition: return "recognition";
        case CapabilityGroup::relation: return "relation";
    }
    return "?";
}

bool try_parse_capability(std::string_view text, Capability& out) {
    const std::string norm = normalize_name(text);
    for (const auto& info : kCapabilities) {
        if (norm == info.name) {
            out = info.id;
            return true;
        }
    }
    return false;
}

Capability parse_capability(std::string_view text) {
    Capability c;
    if (!try_parse_capability(text, c)) {
        throw CapabilityParseError(std::string(text));
    }
    return c;
}

long combination_count(int k) {
    if (k < 1 || k > kCapabilityCount) {
        throw std::out_of_range("combination_count: k must be in [1, 10], got " +
                                std::to_string(k));
    }
    long result = 1;
    for (int i = 0; i < k; ++i) {
        result = result * (kCapabilityCount - i) / (i + 1);
    }
    return result;
}

CapabilityMask mask_of(std::span<const Capability> members) {
    CapabilityMask mask = 0;
    for (Capability c : members) mask |= mask_of(c);
    return mask;
}

int mask_size(CapabilityMask mask) { return std::popcount(mask); }

std::vector<Capability> mask_members(CapabilityMask mask) {
    std::vector<Capability> members;
    for (int i = 0; i < kCapabilityCount; ++i) {
        if (mask & (1u << i)) members.push_back(static_cast<Capability>(i));
    }
    return members;
}

std::string mask_key(CapabilityMask mask) {
    std::string key;
    for (Capability c : mask_members(mask)) {
        if (!key.empty()) key.push_back('+');
        key += to_string(c);
    }
    return key;
}

CapabilityMask parse_mask_key(std::string_view key) {
    CapabilityMask mask = 0;
    std::size_t pos = 0;
    while (pos <= key.size()) {
        std::size_t next = key.find('+', pos);
        if (next == std::string_view::npos) next = key.size();
        std::string_view part = key.substr(pos, next - pos);
        if (!part.empty()) mask |= mask_of(parse_capability(part));
        if (next == key.size()) break;
        pos = next + 1;
    }
    return mask;
}

Combination::Combination(CapabilityMask mask) : mask_(mask) {
    const int k = mask_size(mask);
    if (k < 1 || k > 3) {
        throw std::invalid_argument("combination must have 1-3 members, got " +
                                    std::to_string(k));
    }
}

}  // namespace compact
