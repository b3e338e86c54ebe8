#pragma once

#include <array>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "compact/rng.hpp"
#include "compact/taxonomy.hpp"

namespace compact {

// Raised when every eligible combination for an image has been issued.
class ExhaustionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-image sampling memory: capability use counts plus the set of
// combinations already issued for the image. Confined to one worker at a time.
struct ImageSamplingState {
    std::string image_id;
    std::array<int, kCapabilityCount> use_counts{};
    std::unordered_set<CapabilityMask> issued;

    bool is_issued(CapabilityMask mask) const { return issued.count(mask) != 0; }

    void record(const Combination& combo) {
        issued.insert(combo.mask());
        for (Capability c : combo.members()) {
            ++use_counts[static_cast<std::size_t>(c)];
        }
    }
};

// Draws a size-k_gen combination not yet issued for this image. Members are
// picked one at a time uniformly from the least-used eligible capabilities,
// where eligible means the partial set can still be completed to an unissued
// combination. Updates state. Throws ExhaustionError once all C(10, k_gen)
// combinations have been issued.
Combination sample_combination(ImageSamplingState& state, int k_gen, Rng& rng);

// Target distribution over combinations and k values, used to replicate a
// reference corpus' complexity profile.
struct DistributionProfile {
    std::map<CapabilityMask, double> combination_weights;
    std::map<int, double> k_weights;

    // Throws std::invalid_argument unless weights are nonnegative with at
    // least one positive entry per map and k values lie in [1, 3].
    void validate() const;

    // Scales each map to sum to 1.
    void normalize();

    std::string to_json_string() const;
    static DistributionProfile from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static DistributionProfile load(const std::string& path);
};

// Draws k from k_weights, then a combination of that size from
// combination_weights restricted to unissued combinations (renormalized).
// Falls back to other k values when one is exhausted; throws ExhaustionError
// when no positive-weight combination remains. Updates state.
Combination sample_from_profile(const DistributionProfile& profile,
                                ImageSamplingState& state, Rng& rng);

// One unit of per-image work: collect `quota` accepted conversations for
// k_gen, settling for `floor` once `attempt_cap` attempts are spent.
struct PlanEntry {
    int k_gen = 0;
    int quota = 0;
    int floor = 0;
    int attempt_cap = 0;
};

// Emits plan entries in ascending k_gen order for every k in `quotas`.
// Throws std::invalid_argument on nonpositive quotas or attempt caps.
std::vector<PlanEntry> plan_image(const std::map<int, int>& quotas, int floor,
                                  int attempt_cap);

// Default plan: quota 3 / floor 2 / cap 10 for each k_gen in {1, 2, 3}.
std::vector<PlanEntry> plan_image();

}  // namespace compact
