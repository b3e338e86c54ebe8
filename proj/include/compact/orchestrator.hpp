#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compact/assembler.hpp"
#include "compact/genclient.hpp"
#include "compact/sampler.hpp"
#include "compact/verifier.hpp"

namespace compact {

struct ImageRef {
    std::string id;
    std::string path;
};

// JSONL manifest, one {"image_id": ..., "image_path": ...} per line.
std::vector<ImageRef> load_image_manifest(const std::string& path);

struct PipelineConfig {
    int worker_count = 32;
    std::map<int, int> quotas = {{1, 3}, {2, 3}, {3, 3}};  // k_gen -> accepted target
    int floor = 2;        // (image, k_gen) counts as satisfied at this many accepts
    int attempt_cap = 10;
    VerifierThresholds thresholds;
    GenerationParams params;
    bool strict_capability_match = false;
    std::uint64_t seed = 0;
    int checkpoint_every = 8;    // images per checkpoint write
    std::size_t max_images = 0;  // 0 = no limit; otherwise stop after N images

    // Profile-matched mode: draw combinations (and their k) from a reference
    // profile instead of the coverage sampler.
    std::optional<DistributionProfile> profile;
    int profile_quota = 5;  // accepted conversations per image in profile mode

    void validate() const;
    std::string digest() const;  // config identity for checkpoint compatibility
};

struct AttemptStats {
    int attempts = 0;
    int accepted = 0;
    int rejected = 0;
    int malformed = 0;
};

struct ImageOutcome {
    std::string image_id;
    std::string image_path;
    std::vector<AcceptedConversation> accepted;  // k_gen ascending, acceptance order
    std::vector<RejectionRecord> rejections;
    std::map<int, AttemptStats> per_k;  // keyed by k_gen (profile mode: drawn k)
    bool below_floor = false;
    bool failed = false;  // every attempt came back malformed
    std::string failure_reason;
    bool done = false;
};

struct RunCounters {
    long calls = 0;
    long metered_calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long malformed_replies = 0;
    double elapsed_seconds = 0.0;
};

struct RunCheckpoint {
    std::string config_digest;
    std::string manifest_digest;
    std::vector<ImageOutcome> images;  // manifest order; done flags mark progress
    RunCounters counters;

    std::string to_json_string() const;
    static RunCheckpoint from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static RunCheckpoint load(const std::string& path);
};

struct RunResult {
    std::vector<ImageOutcome> images;  // manifest order
    RunCounters counters;
    bool completed = false;  // every image done
    bool aborted = false;    // backend permanently unavailable
    std::string abort_reason;
};

struct RunOutput {
    RunResult result;
    // set when out_dir was given and the run completed
    std::string compositional_path;
    std::string ledger_path;
    std::string checkpoint_path;
    std::string budget_path;
};

// Drives the per-image generate -> verify loop over all images with a worker
// pool. With an out_dir, persists checkpoint.json incrementally and, on
// completion, compositional.jsonl / ledger.jsonl / budget.json in canonical
// image order. resume loads an existing checkpoint and skips finished images.
RunOutput run(const std::vector<ImageRef>& images, const PipelineConfig& config,
              Backend& backend, const std::string& out_dir = {}, bool resume = false,
              double price_per_1k_tokens = 0.0);

struct BudgetReport {
    long calls = 0;
    long metered_tokens = 0;
    long estimated_tokens = 0;  // metered plus 700 per unmetered call
    double elapsed_seconds = 0.0;
    double cost = 0.0;

    std::string to_json_string() const;
};

BudgetReport budget_report(const RunCounters& counters, double price_per_1k_tokens);

// Accepted conversations grouped per image, sorted by image id, for assembly.
std::vector<AcceptedGroup> accepted_groups(const std::vector<ImageOutcome>& images);

}  // namespace compact
