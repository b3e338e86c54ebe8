#include "compact/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace compact {

namespace {

// All size-k masks over the 10 capabilities, k in {1, 2, 3}.
const std::vector<CapabilityMask>& masks_of_size(int k) {
    static const auto tables = [] {
        std::array<std::vector<CapabilityMask>, 4> t;
        for (CapabilityMask m = 1; m <= kFullMask; ++m) {
            int size = mask_size(m);
            if (size >= 1 && size <= 3) t[static_cast<std::size_t>(size)].push_back(m);
        }
        return t;
    }();
    return tables[static_cast<std::size_t>(k)];
}

bool has_unissued_superset(const ImageSamplingState& state, CapabilityMask partial,
                           int k_gen) {
    for (CapabilityMask m : masks_of_size(k_gen)) {
        if ((m & partial) == partial && !state.is_issued(m)) return true;
    }
    return false;
}

}  // namespace

Combination sample_combination(ImageSamplingState& state, int k_gen, Rng& rng) {
    if (k_gen < 1 || k_gen > 3) {
        throw std::invalid_argument("sample_combination: k_gen must be in [1, 3]");
    }
    if (!has_unissued_superset(state, 0, k_gen)) {
        throw ExhaustionError("all " + std::to_string(combination_count(k_gen)) +
                              " combinations of size " + std::to_string(k_gen) +
                              " issued for image " + state.image_id);
    }

    CapabilityMask partial = 0;
    for (int slot = 0; slot < k_gen; ++slot) {
        // Capabilities that can still complete to an unissued combination.
        std::vector<Capability> stratum;
        int min_count = std::numeric_limits<int>::max();
        for (int i = 0; i < kCapabilityCount; ++i) {
            const Capability c = static_cast<Capability>(i);
            if (mask_contains(partial, c)) continue;
            if (!has_unissued_superset(state, partial | mask_of(c), k_gen)) continue;
            const int count = state.use_counts[static_cast<std::size_t>(i)];
            if (count < min_count) {
                min_count = count;
                stratum.clear();
            }
            if (count == min_count) stratum.push_back(c);
        }
        partial |= mask_of(stratum[rng.bounded(stratum.size())]);
    }

    Combination combo(partial);
    state.record(combo);
    return combo;
}

void DistributionProfile::validate() const {
    if (combination_weights.empty() || k_weights.empty()) {
        throw std::invalid_argument("profile: weight maps must be nonempty");
    }
    double combo_total = 0.0;
    for (const auto& [mask, w] : combination_weights) {
        const int k = mask_size(mask);
        if (k < 1 || k > 3) {
            throw std::invalid_argument("profile: combination " + mask_key(mask) +
                                        " has size outside [1, 3]");
        }
        if (!(w >= 0.0)) {
            throw std::invalid_argument("profile: negative weight for " + mask_key(mask));
        }
        combo_total += w;
    }
    double k_total = 0.0;
    for (const auto& [k, w] : k_weights) {
        if (k < 1 || k > 3) {
            throw std::invalid_argument("profile: k weight outside [1, 3]: k=" +
                                        std::to_string(k));
        }
        if (!(w >= 0.0)) {
            throw std::invalid_argument("profile: negative weight for k=" +
                                        std::to_string(k));
        }
        k_total += w;
    }
    if (!(combo_total > 0.0) || !(k_total > 0.0)) {
        throw std::invalid_argument("profile: at least one positive weight required");
    }
}

void DistributionProfile::normalize() {
    validate();
    double combo_total = 0.0;
    for (const auto& [mask, w] : combination_weights) combo_total += w;
    for (auto& [mask, w] : combination_weights) w /= combo_total;
    double k_total = 0.0;
    for (const auto& [k, w] : k_weights) k_total += w;
    for (auto& [k, w] : k_weights) w /= k_total;
}

std::string DistributionProfile::to_json_string() const {
    nlohmann::json j;
    j["combination_weights"] = nlohmann::json::object();
    for (const auto& [mask, w] : combination_weights) {
        j["combination_weights"][mask_key(mask)] = w;
    }
    j["k_weights"] = nlohmann::json::object();
    for (const auto& [k, w] : k_weights) {
        j["k_weights"][std::to_string(k)] = w;
    }
    return j.dump(2);
}

DistributionProfile DistributionProfile::from_json_string(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    DistributionProfile profile;
    for (const auto& [key, w] : j.at("combination_weights").items()) {
        profile.combination_weights[parse_mask_key(key)] = w.get<double>();
    }
    for (const auto& [key, w] : j.at("k_weights").items()) {
        profile.k_weights[std::stoi(key)] = w.get<double>();
    }
    profile.validate();
    return profile;
}

void DistributionProfile::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write profile: " + path);
    out << to_json_string() << '\n';
}

DistributionProfile DistributionProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read profile: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_string(buffer.str());
}

Combination sample_from_profile(const DistributionProfile& profile,
                                ImageSamplingState& state, Rng& rng) {
    profile.validate();

    // Per-k pools of unissued positive-weight combinations.
    std::array<std::vector<CapabilityMask>, 4> pool_masks;
    std::array<std::vector<double>, 4> pool_weights;
    for (const auto& [mask, w] : profile.combination_weights) {
        if (w <= 0.0 || state.is_issued(mask)) continue;
        const int k = mask_size(mask);
        pool_masks[static_cast<std::size_t>(k)].push_back(mask);
        pool_weights[static_cast<std::size_t>(k)].push_back(w);
    }

    std::vector<int> ks;
    std::vector<double> k_w;
    for (const auto& [k, w] : profile.k_weights) {
        if (w <= 0.0 || pool_masks[static_cast<std::size_t>(k)].empty()) continue;
        ks.push_back(k);
        k_w.push_back(w);
    }
    if (ks.empty()) {
        throw ExhaustionError("all positive-weight combinations issued for image " +
                              state.image_id);
    }

    const int k = ks[rng.weighted(k_w)];
    const auto& masks = pool_masks[static_cast<std::size_t>(k)];
    const auto& weights = pool_weights[static_cast<std::size_t>(k)];
    Combination combo(masks[rng.weighted(weights)]);
    state.record(combo);
    return combo;
}

std::vector<PlanEntry> plan_image(const std::map<int, int>& quotas, int floor,
                                  int attempt_cap) {
    if (attempt_cap < 1) {
        throw std::invalid_argument("plan_image: attempt_cap must be >= 1");
    }
    if (floor < 0) {
        throw std::invalid_argument("plan_image: floor must be >= 0");
    }
    std::vector<PlanEntry> plan;
    for (const auto& [k_gen, quota] : quotas) {  // std::map iterates k ascending
        if (k_gen < 1 || k_gen > 3) {
            throw std::invalid_argument("plan_image: k_gen must be in [1, 3], got " +
                                        std::to_string(k_gen));
        }
        if (quota < 1) {
            throw std::invalid_argument("plan_image: quota must be >= 1 for k_gen=" +
                                        std::to_string(k_gen));
        }
        plan.push_back({k_gen, quota, std::min(floor, quota), attempt_cap});
    }
    return plan;
}

std::vector<PlanEntry> plan_image() {
    return plan_image({{1, 3}, {2, 3}, {3, 3}}, 2, 10);
}

}  // namespace compact
