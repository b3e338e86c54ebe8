#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compact {

// The closed set of ten atomic visual capabilities. Enumerator order is the
// canonical order used everywhere: sampling, prompts, reports, serialization.
enum class Capability : std::uint8_t {
    color = 0,
    shape,
    object_recognition,
    action_recognition,
    text_recognition,
    spatial_recognition,
    counting,
    spatial_relationship,
    object_interaction,
    scene_understanding,
};

inline constexpr int kCapabilityCount = 10;

enum class CapabilityGroup : std::uint8_t {
    attribution,
    recognition,
    relation,
};

struct CapabilityInfo {
    Capability id;
    CapabilityGroup group;
    std::string_view name;              // snake_case token, shared with prompts
    std::string_view definition;
    std::string_view example_question;
};

// The ten capabilities in canonical order.
std::span<const CapabilityInfo> all_capabilities();

const CapabilityInfo& capability_info(Capability id);

std::string_view to_string(Capability id);
std::string_view to_string(CapabilityGroup group);

class CapabilityParseError : public std::runtime_error {
public:
    explicit CapabilityParseError(const std::string& offending)
        : std::runtime_error("unknown capability: \"" + offending + "\""),
          offending_(offending) {}
    const std::string& offending() const { return offending_; }

private:
    std::string offending_;
};

// Case-insensitive match on the capability id; underscores and spaces are
// interchangeable. Throws CapabilityParseError on unknown names.
Capability parse_capability(std::string_view text);

// Non-throwing variant for paths that drop unknown names.
bool try_parse_capability(std::string_view text, Capability& out);

// C(10, k) for 1 <= k <= 10; throws std::out_of_range otherwise.
long combination_count(int k);

// ---------------------------------------------------------------------------
// Capability sets as 10-bit masks (bit i = capability with enum value i).
// Masks carry arbitrary subsets; Combination below is the 1..3 sampling unit.
// ---------------------------------------------------------------------------

using CapabilityMask = std::uint16_t;

inline constexpr CapabilityMask kFullMask = (1u << kCapabilityCount) - 1;

inline CapabilityMask mask_of(Capability c) {
    return static_cast<CapabilityMask>(1u << static_cast<unsigned>(c));
}

CapabilityMask mask_of(std::span<const Capability> members);

inline bool mask_contains(CapabilityMask mask, Capability c) {
    return (mask & mask_of(c)) != 0;
}

int mask_size(CapabilityMask mask);

// Members in canonical order.
std::vector<Capability> mask_members(CapabilityMask mask);

// Canonical key, members joined with '+' in canonical order,
// e.g. "color+object_recognition".
std::string mask_key(CapabilityMask mask);

// Inverse of mask_key; accepts any capability spelling parse_capability does.
CapabilityMask parse_mask_key(std::string_view key);

// An unordered set of 1-3 capabilities sampled for one generation attempt.
class Combination {
public:
    explicit Combination(CapabilityMask mask);
    explicit Combination(std::span<const Capability> members)
        : Combination(mask_of(members)) {}
    Combination(std::initializer_list<Capability> members)
        : Combination(std::span<const Capability>(members.begin(), members.size())) {}

    CapabilityMask mask() const { return mask_; }
    int k_gen() const { return mask_size(mask_); }
    std::vector<Capability> members() const { return mask_members(mask_); }
    std::string key() const { return mask_key(mask_); }
    bool contains(Capability c) const { return mask_contains(mask_, c); }

    friend bool operator==(const Combination&, const Combination&) = default;

private:
    CapabilityMask mask_;
};

}  // namespace compact
