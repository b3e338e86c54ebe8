#include "compact/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "compact/io_util.hpp"
#include "compact/log.hpp"
#include "compact/rng.hpp"

namespace compact {

namespace {

nlohmann::json accepted_to_json(const AcceptedConversation& conv) {
    return {{"image_id", conv.image_id},
            {"requested", mask_key(conv.requested)},
            {"k_gen", conv.k_gen},
            {"question", conv.question},
            {"answer", conv.answer},
            {"confidence", conv.confidence},
            {"identified", mask_key(conv.identified)},
            {"k_final", conv.k_final},
            {"attempt_index", conv.attempt_index}};
}

AcceptedConversation accepted_from_json(const nlohmann::json& j) {
    AcceptedConversation conv;
    conv.image_id = j.at("image_id").get<std::string>();
    conv.requested = parse_mask_key(j.at("requested").get<std::string>());
    conv.k_gen = j.at("k_gen").get<int>();
    conv.question = j.at("question").get<std::string>();
    conv.answer = j.at("answer").get<std::string>();
    conv.confidence = j.at("confidence").get<int>();
    conv.identified = parse_mask_key(j.at("identified").get<std::string>());
    conv.k_final = j.at("k_final").get<int>();
    conv.attempt_index = j.at("attempt_index").get<int>();
    return conv;
}

nlohmann::json outcome_to_json(const ImageOutcome& outcome) {
    nlohmann::json j;
    j["image_id"] = outcome.image_id;
    j["image_path"] = outcome.image_path;
    j["done"] = outcome.done;
    j["below_floor"] = outcome.below_floor;
    j["failed"] = outcome.failed;
    j["failure_reason"] = outcome.failure_reason;
    j["accepted"] = nlohmann::json::array();
    for (const auto& conv : outcome.accepted) j["accepted"].push_back(accepted_to_json(conv));
    j["rejections"] = nlohmann::json::array();
    for (const auto& rec : outcome.rejections) {
        j["rejections"].push_back(nlohmann::json::parse(rejection_to_jsonl(rec)));
    }
    j["per_k"] = nlohmann::json::object();
    for (const auto& [k, stats] : outcome.per_k) {
        j["per_k"][std::to_string(k)] = {{"attempts", stats.attempts},
                                         {"accepted", stats.accepted},
                                         {"rejected", stats.rejected},
                                         {"malformed", stats.malformed}};
    }
    return j;
}

ImageOutcome outcome_from_json(const nlohmann::json& j) {
    ImageOutcome outcome;
    outcome.image_id = j.at("image_id").get<std::string>();
    outcome.image_path = j.at("image_path").get<std::string>();
    outcome.done = j.at("done").get<bool>();
    outcome.below_floor = j.at("below_floor").get<bool>();
    outcome.failed = j.at("failed").get<bool>();
    outcome.failure_reason = j.value("failure_reason", std::string());
    for (const auto& conv : j.at("accepted")) {
        outcome.accepted.push_back(accepted_from_json(conv));
    }
    for (const auto& rec : j.at("rejections")) {
        outcome.rejections.push_back(rejection_from_jsonl(rec.dump()));
    }
    for (const auto& [key, stats] : j.at("per_k").items()) {
        outcome.per_k[std::stoi(key)] = AttemptStats{
            stats.at("attempts").get<int>(), stats.at("accepted").get<int>(),
            stats.at("rejected").get<int>(), stats.at("malformed").get<int>()};
    }
    return outcome;
}

std::string manifest_digest(const std::vector<ImageRef>& images) {
    std::string blob;
    for (const ImageRef& ref : images) {
        blob += ref.id;
        blob += '\x1f';
        blob += ref.path;
        blob += '\n';
    }
    return content_digest_hex(blob);
}

// One (image, k_gen) work unit: loop until quota accepted or cap spent.
void run_bucket(ImageOutcome& outcome, ImageSamplingState& state, int k_gen, int quota,
                int attempt_cap, bool profile_mode, const PipelineConfig& config,
                GenClient& client, Rng& rng) {
    AttemptStats local;
    int attempt_index = 0;
    while (local.accepted < quota && local.attempts < attempt_cap) {
        CapabilityMask combo_mask = 0;
        try {
            if (profile_mode) {
                combo_mask = sample_from_profile(*config.profile, state, rng).mask();
            } else {
                combo_mask = sample_combination(state, k_gen, rng).mask();
            }
        } catch (const ExhaustionError&) {
            break;  // nothing left to try for this image
        }
        const Combination combo(combo_mask);
        ++local.attempts;
        const int stats_k = profile_mode ? combo.k_gen() : k_gen;
        ++outcome.per_k[stats_k].attempts;

        try {
            const ConversationCandidate candidate = client.generate(
                outcome.image_id, outcome.image_path, combo, attempt_index);
            const CapabilityVerdict verdict = client.verify_capabilities(
                candidate.question, candidate.answer, combo);
            CheckResult result =
                check(candidate, verdict, outcome.accepted, config.thresholds);
            if (std::holds_alternative<AcceptedConversation>(result)) {
                outcome.accepted.push_back(std::get<AcceptedConversation>(std::move(result)));
                ++local.accepted;
                ++outcome.per_k[stats_k].accepted;
            } else {
                outcome.rejections.push_back(std::get<RejectionRecord>(std::move(result)));
                ++local.rejected;
                ++outcome.per_k[stats_k].rejected;
            }
        } catch (const MalformedReplyError& e) {
            ++local.malformed;
            ++outcome.per_k[stats_k].malformed;
            log_warn("malformed_reply",
                     {{"image", outcome.image_id}, {"error", e.what()}});
        }
        ++attempt_index;
    }
    if (local.accepted < std::min(config.floor, quota)) outcome.below_floor = true;
}

void process_image(ImageOutcome& outcome, const PipelineConfig& config,
                   GenClient& client) {
    Rng rng(derive_seed(config.seed, outcome.image_id));
    ImageSamplingState state;
    state.image_id = outcome.image_id;

    if (config.profile) {
        run_bucket(outcome, state, /*k_gen=*/0, config.profile_quota,
                   config.attempt_cap, /*profile_mode=*/true, config, client, rng);
    } else {
        for (const PlanEntry& entry :
             plan_image(config.quotas, config.floor, config.attempt_cap)) {
            run_bucket(outcome, state, entry.k_gen, entry.quota, entry.attempt_cap,
                       /*profile_mode=*/false, config, client, rng);
        }
    }

    int attempts = 0;
    int malformed = 0;
    for (const auto& [k, stats] : outcome.per_k) {
        attempts += stats.attempts;
        malformed += stats.malformed;
    }
    if (attempts > 0 && malformed == attempts) {
        outcome.failed = true;
        outcome.failure_reason = "every attempt returned a malformed reply";
        log_error("image_failed", {{"image", outcome.image_id}});
    }
    outcome.done = true;
}

}  // namespace

std::vector<ImageRef> load_image_manifest(const std::string& path) {
    std::vector<ImageRef> images;
    std::size_t line_no = 0;
    for (const std::string& line : read_lines(path)) {
        ++line_no;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            images.push_back(
                {j.at("image_id").get<std::string>(), j.value("image_path", std::string())});
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    if (images.empty()) throw std::runtime_error("image manifest is empty: " + path);
    return images;
}

void PipelineConfig::validate() const {
    if (worker_count < 1) throw std::invalid_argument("pipeline.workers must be >= 1");
    if (attempt_cap < 1) throw std::invalid_argument("pipeline.attempt_cap must be >= 1");
    if (checkpoint_every < 1) {
        throw std::invalid_argument("pipeline.checkpoint_every must be >= 1");
    }
    if (quotas.empty()) throw std::invalid_argument("pipeline.quotas must be nonempty");
    for (const auto& [k, quota] : quotas) {
        if (k < 1 || k > 3) {
            throw std::invalid_argument("pipeline.quotas: k_gen must be in [1, 3]");
        }
        if (quota < 1) throw std::invalid_argument("pipeline.quotas: quota must be >= 1");
        if (floor > quota) {
            throw std::invalid_argument("pipeline.floor must be <= quota");
        }
    }
    if (floor < 0) throw std::invalid_argument("pipeline.floor must be >= 0");
    if (profile_quota < 1) {
        throw std::invalid_argument("pipeline.profile_quota must be >= 1");
    }
    thresholds.validate();
    params.validate();
    if (profile) profile->validate();
}

std::string PipelineConfig::digest() const {
    nlohmann::json j;
    j["quotas"] = nlohmann::json::object();
    for (const auto& [k, quota] : quotas) j["quotas"][std::to_string(k)] = quota;
    j["floor"] = floor;
    j["attempt_cap"] = attempt_cap;
    j["confidence"] = thresholds.confidence;
    j["overlap"] = thresholds.overlap;
    j["uninformative"] = thresholds.uninformative;
    j["temperature"] = params.temperature;
    j["top_p"] = params.top_p;
    j["max_tokens"] = params.max_tokens;
    j["model"] = params.model_name;
    j["strict"] = strict_capability_match;
    j["seed"] = seed;
    j["profile"] = profile ? profile->to_json_string() : "";
    j["profile_quota"] = profile_quota;
    return content_digest_hex(j.dump());
}

std::string RunCheckpoint::to_json_string() const {
    nlohmann::json j;
    j["config_digest"] = config_digest;
    j["manifest_digest"] = manifest_digest;
    j["counters"] = {{"calls", counters.calls},
                     {"metered_calls", counters.metered_calls},
                     {"prompt_tokens", counters.prompt_tokens},
                     {"completion_tokens", counters.completion_tokens},
                     {"malformed_replies", counters.malformed_replies}};
    j["images"] = nlohmann::json::array();
    for (const ImageOutcome& outcome : images) j["images"].push_back(outcome_to_json(outcome));
    return j.dump();
}

RunCheckpoint RunCheckpoint::from_json_string(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    RunCheckpoint checkpoint;
    checkpoint.config_digest = j.at("config_digest").get<std::string>();
    checkpoint.manifest_digest = j.at("manifest_digest").get<std::string>();
    const auto& counters = j.at("counters");
    checkpoint.counters.calls = counters.at("calls").get<long>();
    checkpoint.counters.metered_calls = counters.at("metered_calls").get<long>();
    checkpoint.counters.prompt_tokens = counters.at("prompt_tokens").get<long>();
    checkpoint.counters.completion_tokens = counters.at("completion_tokens").get<long>();
    checkpoint.counters.malformed_replies = counters.at("malformed_replies").get<long>();
    for (const auto& outcome : j.at("images")) {
        checkpoint.images.push_back(outcome_from_json(outcome));
    }
    return checkpoint;
}

void RunCheckpoint::save(const std::string& path) const {
    write_file_atomic(path, to_json_string());
}

RunCheckpoint RunCheckpoint::load(const std::string& path) {
    return from_json_string(read_file(path));
}

std::vector<AcceptedGroup> accepted_groups(const std::vector<ImageOutcome>& images) {
    std::vector<AcceptedGroup> groups;
    for (const ImageOutcome& outcome : images) {
        groups.push_back({outcome.image_id, outcome.image_path, outcome.accepted});
    }
    std::sort(groups.begin(), groups.end(),
              [](const AcceptedGroup& a, const AcceptedGroup& b) {
                  return a.image_id < b.image_id;
              });
    return groups;
}

RunOutput run(const std::vector<ImageRef>& images, const PipelineConfig& config,
              Backend& backend, const std::string& out_dir, bool resume,
              double price_per_1k_tokens) {
    config.validate();
    if (images.empty()) throw std::invalid_argument("run: images must be nonempty");

    const auto start_time = std::chrono::steady_clock::now();
    const std::string digest = config.digest();
    const std::string images_digest = manifest_digest(images);
    const std::string checkpoint_path =
        out_dir.empty() ? std::string() : out_dir + "/checkpoint.json";

    RunResult result;
    RunCounters resumed_counters;
    if (resume && !checkpoint_path.empty() &&
        std::filesystem::exists(checkpoint_path)) {
        RunCheckpoint checkpoint = RunCheckpoint::load(checkpoint_path);
        if (checkpoint.config_digest != digest) {
            throw std::runtime_error("resume: config differs from checkpointed run");
        }
        if (checkpoint.manifest_digest != images_digest) {
            throw std::runtime_error("resume: image manifest differs from checkpointed run");
        }
        result.images = std::move(checkpoint.images);
        resumed_counters = checkpoint.counters;
        log_info("resumed", {{"checkpoint", checkpoint_path}});
    } else {
        result.images.reserve(images.size());
        for (const ImageRef& ref : images) {
            ImageOutcome outcome;
            outcome.image_id = ref.id;
            outcome.image_path = ref.path;
            result.images.push_back(std::move(outcome));
        }
    }

    // Pending images, truncated by max_images for smoke runs and
    // deterministic interruption.
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < result.images.size(); ++i) {
        if (!result.images[i].done) pending.push_back(i);
    }
    if (config.max_images > 0 && pending.size() > config.max_images) {
        pending.resize(config.max_images);
    }

    GenClient client(backend, config.params, config.strict_capability_match);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex done_mutex;
    std::size_t done_since_checkpoint = 0;
    std::string abort_reason;

    auto save_checkpoint = [&](bool force) {
        // caller holds done_mutex
        if (checkpoint_path.empty()) return;
        ++done_since_checkpoint;
        if (!force && done_since_checkpoint < static_cast<std::size_t>(
                                                  config.checkpoint_every)) {
            return;
        }
        done_since_checkpoint = 0;
        RunCheckpoint checkpoint;
        checkpoint.config_digest = digest;
        checkpoint.manifest_digest = images_digest;
        checkpoint.images = result.images;
        checkpoint.counters.calls = client.counters().calls.load();
        checkpoint.counters.metered_calls = client.counters().metered_calls.load();
        checkpoint.counters.prompt_tokens = client.counters().prompt_tokens.load();
        checkpoint.counters.completion_tokens =
            client.counters().completion_tokens.load();
        checkpoint.counters.malformed_replies =
            client.counters().malformed_replies.load();
        checkpoint.counters.calls += resumed_counters.calls;
        checkpoint.counters.metered_calls += resumed_counters.metered_calls;
        checkpoint.counters.prompt_tokens += resumed_counters.prompt_tokens;
        checkpoint.counters.completion_tokens += resumed_counters.completion_tokens;
        checkpoint.counters.malformed_replies += resumed_counters.malformed_replies;
        checkpoint.save(checkpoint_path);
    };

    auto worker = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const std::size_t index = pending[slot];
            ImageOutcome outcome = result.images[index];  // copy; publish when done
            try {
                process_image(outcome, config, client);
            } catch (const TransportError& e) {
                std::lock_guard<std::mutex> lock(done_mutex);
                abort.store(true);
                abort_reason = e.what();
                return;
            } catch (const std::exception& e) {
                // fatal per-image error: flag it and keep the run alive
                outcome.failed = true;
                outcome.failure_reason = e.what();
                outcome.done = true;
                log_error("image_failed",
                          {{"image", outcome.image_id}, {"error", e.what()}});
            }
            std::lock_guard<std::mutex> lock(done_mutex);
            result.images[index] = std::move(outcome);
            save_checkpoint(/*force=*/false);
        }
    };

    const std::size_t thread_count = std::min<std::size_t>(
        static_cast<std::size_t>(config.worker_count), std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();

    result.counters.calls = resumed_counters.calls + client.counters().calls.load();
    result.counters.metered_calls =
        resumed_counters.metered_calls + client.counters().metered_calls.load();
    result.counters.prompt_tokens =
        resumed_counters.prompt_tokens + client.counters().prompt_tokens.load();
    result.counters.completion_tokens =
        resumed_counters.completion_tokens + client.counters().completion_tokens.load();
    result.counters.malformed_replies =
        resumed_counters.malformed_replies + client.counters().malformed_replies.load();
    result.counters.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
            .count();

    result.completed = std::all_of(result.images.begin(), result.images.end(),
                                   [](const ImageOutcome& o) { return o.done; });
    result.aborted = abort.load();
    result.abort_reason = abort_reason;

    RunOutput output;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        {
            std::lock_guard<std::mutex> lock(done_mutex);
            save_checkpoint(/*force=*/true);
        }
        output.checkpoint_path = checkpoint_path;
        if (result.completed && !result.aborted) {
            const auto groups = accepted_groups(result.images);
            const ToEntriesResult entries = to_entries(groups);
            output.compositional_path = out_dir + "/compositional.jsonl";
            write_entries_jsonl(output.compositional_path, entries.entries);

            std::vector<RejectionRecord> ledger;
            for (const ImageOutcome& outcome : result.images) {
                ledger.insert(ledger.end(), outcome.rejections.begin(),
                              outcome.rejections.end());
            }
            std::sort(ledger.begin(), ledger.end(),
                      [](const RejectionRecord& a, const RejectionRecord& b) {
                          const auto key = [](const RejectionRecord& r) {
                              return std::make_tuple(r.candidate.image_id,
                                                     r.candidate.requested.k_gen(),
                                                     r.candidate.attempt_index,
                                                     r.candidate.requested.key());
                          };
                          return key(a) < key(b);
                      });
            std::string ledger_text;
            for (const RejectionRecord& record : ledger) {
                ledger_text += rejection_to_jsonl(record);
                ledger_text += '\n';
            }
            output.ledger_path = out_dir + "/ledger.jsonl";
            write_file_atomic(output.ledger_path, ledger_text);

            output.budget_path = out_dir + "/budget.json";
            write_file_atomic(
                output.budget_path,
                budget_report(result.counters, price_per_1k_tokens).to_json_string());
        }
    }
    if (result.aborted) {
        log_error("run_aborted", {{"reason", result.abort_reason}});
    }
    output.result = std::move(result);
    return output;
}

BudgetReport budget_report(const RunCounters& counters, double price_per_1k_tokens) {
    BudgetReport report;
    report.calls = counters.calls;
    report.metered_tokens = counters.prompt_tokens + counters.completion_tokens;
    const long unmetered_calls = counters.calls - counters.metered_calls;
    report.estimated_tokens = report.metered_tokens + unmetered_calls * 700;
    report.elapsed_seconds = counters.elapsed_seconds;
    report.cost = static_cast<double>(report.estimated_tokens) / 1000.0 *
                  price_per_1k_tokens;
    return report;
}

std::string BudgetReport::to_json_string() const {
    nlohmann::json j;
    j["calls"] = calls;
    j["metered_tokens"] = metered_tokens;
    j["estimated_tokens"] = estimated_tokens;
    j["elapsed_seconds"] = elapsed_seconds;
    j["cost"] = cost;
    return j.dump(2);
}

}  // namespace compact
