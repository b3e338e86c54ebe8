#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compact/analyzer.hpp"
#include "compact/config.hpp"
#include "compact/io_util.hpp"
#include "compact/log.hpp"
#include "compact/mock_backend.hpp"
#include "compact/orchestrator.hpp"
#include "compact/remote_backend.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

using compact::FullConfig;

std::string timestamp_utc() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

std::unique_ptr<compact::Backend> make_backend(const compact::BackendConfig& config) {
    if (config.kind == "remote") {
        compact::RemoteBackendOptions options;
        options.endpoint = config.endpoint;
        options.api_key_env = config.api_key_env;
        options.max_retries = config.max_retries;
        options.max_inflight = config.max_inflight;
        return std::make_unique<compact::RemoteBackend>(std::move(options));
    }
    auto mock = std::make_unique<compact::MockBackend>(
        compact::parse_mock_policy(config.mock_policy));
    mock->set_report_usage(config.report_usage);
    if (!config.fixture.empty()) mock->load_fixture(config.fixture);
    return mock;
}

// Per-invocation provenance record: config and input/output digests plus the
// seeds that determined the run.
void write_run_manifest(const std::string& path, const std::string& command,
                        const std::string& config_path,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const std::map<std::string, std::uint64_t>& seeds) {
    nlohmann::json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = command;
    manifest["timestamp_utc"] = timestamp_utc();
    manifest["config_path"] = config_path;
    manifest["config_digest"] =
        config_path.empty() ? "" : compact::file_digest_hex(config_path);
    manifest["inputs"] = nlohmann::json::object();
    for (const std::string& input : inputs) {
        if (!input.empty() && std::filesystem::exists(input)) {
            manifest["inputs"][input] = compact::file_digest_hex(input);
        }
    }
    manifest["outputs"] = nlohmann::json::object();
    for (const std::string& output : outputs) {
        if (!output.empty() && std::filesystem::exists(output)) {
            manifest["outputs"][output] = compact::file_digest_hex(output);
        }
    }
    manifest["seeds"] = nlohmann::json::object();
    for (const auto& [name, seed] : seeds) manifest["seeds"][name] = seed;
    compact::write_file_atomic(path, manifest.dump(2) + "\n");
}

void write_csv(const std::string& path, const std::string& header,
               const std::map<int, long>& rows) {
    std::string csv = header + "\n";
    for (const auto& [key, value] : rows) {
        csv += std::to_string(key) + "," + std::to_string(value) + "\n";
    }
    compact::write_file_atomic(path, csv);
}

int cmd_generate(const std::string& images_path, const std::string& config_path,
                 const std::string& out_dir, bool resume) {
    const FullConfig config = compact::load_config(config_path);
    const auto images = compact::load_image_manifest(images_path);
    const auto backend = make_backend(config.backend);
    compact::log_info("generate_start",
                      {{"images", std::to_string(images.size())},
                       {"backend", backend->name()},
                       {"workers", std::to_string(config.pipeline.worker_count)}});

    const compact::RunOutput output =
        compact::run(images, config.pipeline, *backend, out_dir, resume,
                     config.backend.price_per_1k_tokens);

    write_run_manifest(out_dir + "/run_manifest.json", "generate", config_path,
                       {images_path, config.backend.fixture},
                       {output.compositional_path, output.ledger_path,
                        output.checkpoint_path, output.budget_path},
                       {{"pipeline", config.pipeline.seed}});

    long accepted = 0;
    long rejected = 0;
    for (const auto& image : output.result.images) {
        accepted += static_cast<long>(image.accepted.size());
        rejected += static_cast<long>(image.rejections.size());
    }
    compact::log_info("generate_done",
                      {{"accepted", std::to_string(accepted)},
                       {"rejected", std::to_string(rejected)},
                       {"calls", std::to_string(output.result.counters.calls)},
                       {"completed", output.result.completed ? "true" : "false"}});
    if (output.result.aborted) {
        compact::log_error("generate_aborted", {{"reason", output.result.abort_reason}});
        return 1;
    }
    if (!output.result.completed) {
        compact::log_warn("generate_partial",
                          {{"note", "max_images reached; re-run with --resume"}});
    }
    return 0;
}

int cmd_assemble(const std::string& compositional_path, const std::string& vit_path,
                 double fraction, std::uint64_t seed, const std::string& out_path) {
    std::vector<compact::DatasetEntry> compositional =
        compact::load_entries(compositional_path);
    std::vector<compact::DatasetEntry> vit_pool;
    if (!vit_path.empty()) vit_pool = compact::load_entries(vit_path);

    compact::MixSpec spec;
    spec.vit_fraction = fraction;
    spec.seed = seed;
    compact::MixResult result = compact::mix(std::move(compositional), vit_pool, spec);
    compact::write_entries_jsonl(out_path, result.entries);

    nlohmann::json manifest = result.manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["timestamp_utc"] = timestamp_utc();
    manifest["inputs"] = nlohmann::json::object();
    manifest["inputs"][compositional_path] = compact::file_digest_hex(compositional_path);
    if (!vit_path.empty()) {
        manifest["inputs"][vit_path] = compact::file_digest_hex(vit_path);
    }
    manifest["output"] = out_path;
    manifest["output_digest"] = compact::file_digest_hex(out_path);
    compact::write_file_atomic(out_path + ".manifest.json", manifest.dump(2) + "\n");

    compact::log_info("assemble_done",
                      {{"total", std::to_string(result.entries.size())},
                       {"out", out_path}});
    return 0;
}

int cmd_analyze(const std::string& dataset_path, const std::string& backend_kind,
                const std::string& fixture, std::size_t sample_images,
                std::uint64_t seed, const std::string& out_dir,
                const std::string& config_path, const std::string& compare_path) {
    FullConfig config = compact::load_config(config_path);
    if (!backend_kind.empty()) config.backend.kind = backend_kind;
    if (!fixture.empty()) config.backend.fixture = fixture;
    if (config.backend.kind == "mock" && config.backend.mock_policy == "accept" &&
        config.backend.fixture.empty()) {
        // Unscripted analysis answers would silently skew the profile.
        config.backend.mock_policy = "error";
    }
    config.backend.validate();
    const auto backend = make_backend(config.backend);
    compact::GenClient client(*backend, config.pipeline.params);

    const auto dataset = compact::load_entries(dataset_path);
    const compact::KProfile profile =
        compact::profile_k(dataset, client, sample_images, seed);
    const compact::CapabilityFrequency frequency = compact::capability_frequency(profile);
    const compact::ConversationsPerImage conversations =
        compact::conversations_per_image(dataset);
    const compact::TokenStats tokens = compact::token_stats(dataset);

    std::filesystem::create_directories(out_dir);
    compact::write_file_atomic(out_dir + "/kprofile.json",
                               profile.to_json().dump(2) + "\n");
    compact::write_file_atomic(out_dir + "/frequency.json",
                               frequency.to_json().dump(2) + "\n");
    if (profile.total_questions >= 2) {
        compact::write_file_atomic(out_dir + "/cooccurrence.json",
                                   compact::cooccurrence(profile).to_json().dump(2) + "\n");
    }
    compact::write_file_atomic(out_dir + "/conversations.json",
                               conversations.to_json().dump(2) + "\n");

    nlohmann::json token_report = tokens.to_json();
    if (!compare_path.empty()) {
        const auto reference = compact::load_entries(compare_path);
        const compact::TokenStats reference_tokens = compact::token_stats(reference);
        token_report["reference"] = reference_tokens.to_json();
        token_report["reduction_percent"] =
            compact::token_reduction_percent(tokens, reference_tokens);
    }
    compact::write_file_atomic(out_dir + "/token_stats.json",
                               token_report.dump(2) + "\n");

    std::map<int, long> k_rows;
    for (int k = 0; k <= compact::kCapabilityCount; ++k) {
        k_rows[k] = profile.histogram[static_cast<std::size_t>(k)];
    }
    write_csv(out_dir + "/k_histogram.csv", "k,questions", k_rows);
    write_csv(out_dir + "/conversations_histogram.csv", "pairs,images",
              conversations.histogram);

    write_run_manifest(out_dir + "/run_manifest.json", "analyze", config_path,
                       {dataset_path, compare_path, config.backend.fixture},
                       {out_dir + "/kprofile.json", out_dir + "/frequency.json",
                        out_dir + "/cooccurrence.json", out_dir + "/conversations.json",
                        out_dir + "/token_stats.json", out_dir + "/k_histogram.csv",
                        out_dir + "/conversations_histogram.csv"},
                       {{"sample", seed}});

    compact::log_info("analyze_done",
                      {{"questions", std::to_string(profile.total_questions)},
                       {"mean_k", std::to_string(profile.mean_k)},
                       {"out", out_dir}});
    return 0;
}

int cmd_match_profile(const std::string& reference_path, const std::string& backend_kind,
                      const std::string& fixture, std::size_t sample_images,
                      std::uint64_t seed, const std::string& out_path,
                      const std::string& config_path) {
    FullConfig config = compact::load_config(config_path);
    if (!backend_kind.empty()) config.backend.kind = backend_kind;
    if (!fixture.empty()) config.backend.fixture = fixture;
    if (config.backend.kind == "mock" && config.backend.mock_policy == "accept" &&
        config.backend.fixture.empty()) {
        config.backend.mock_policy = "error";
    }
    const auto backend = make_backend(config.backend);
    compact::GenClient client(*backend, config.pipeline.params);

    const auto reference = compact::load_entries(reference_path);
    const compact::KProfile profile =
        compact::profile_k(reference, client, sample_images, seed);
    const compact::DistributionProfile distribution = compact::extract_profile(profile);
    distribution.save(out_path);

    write_run_manifest(out_path + ".manifest.json", "match-profile", config_path,
                       {reference_path, config.backend.fixture}, {out_path},
                       {{"sample", seed}});
    compact::log_info("match_profile_done", {{"out", out_path}});
    return 0;
}

int cmd_report(const std::string& ledger_path, long accepted,
               const std::string& checkpoint_path, bool as_json) {
    const auto ledger = compact::load_ledger(ledger_path);
    if (!checkpoint_path.empty()) {
        const auto checkpoint = compact::RunCheckpoint::load(checkpoint_path);
        accepted = 0;
        for (const auto& image : checkpoint.images) {
            accepted += static_cast<long>(image.accepted.size());
        }
    }
    const compact::YieldReport report = compact::yield_report(ledger, accepted);
    std::cout << (as_json ? report.to_json_string() + "\n" : report.to_text());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compositional visual-instruction tuning data pipeline"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand(
        "generate", "run the sample -> generate -> verify loop over an image manifest");
    std::string gen_images;
    std::string gen_config;
    std::string gen_out;
    bool gen_resume = false;
    generate->add_option("--images", gen_images, "image manifest JSONL")->required();
    generate->add_option("--config", gen_config, "config file");
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_flag("--resume", gen_resume, "resume from checkpoint.json in --out");

    // assemble
    auto* assemble = app.add_subcommand(
        "assemble", "mix compositional entries with an instruction-tuning subset");
    std::string asm_compositional;
    std::string asm_vit;
    double asm_fraction = 0.05;
    std::uint64_t asm_seed = 0;
    std::string asm_out;
    assemble->add_option("--compositional", asm_compositional, "compositional entries")
        ->required();
    assemble->add_option("--vit", asm_vit, "instruction-tuning pool");
    assemble->add_option("--fraction", asm_fraction, "subset fraction of the pool");
    assemble->add_option("--seed", asm_seed, "sampling and shuffle seed");
    assemble->add_option("--out", asm_out, "output JSONL")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "dataset complexity and statistics");
    std::string ana_dataset;
    std::string ana_backend;
    std::string ana_fixture;
    std::size_t ana_samples = 1000;
    std::uint64_t ana_seed = 0;
    std::string ana_out;
    std::string ana_config;
    std::string ana_compare;
    analyze->add_option("--dataset", ana_dataset, "entries JSON/JSONL")->required();
    analyze->add_option("--backend", ana_backend, "mock | remote");
    analyze->add_option("--fixture", ana_fixture, "mock analysis fixture JSONL");
    analyze->add_option("--sample-images", ana_samples, "images to sample");
    analyze->add_option("--seed", ana_seed, "sampling seed");
    analyze->add_option("--out", ana_out, "output directory")->required();
    analyze->add_option("--config", ana_config, "config file");
    analyze->add_option("--compare", ana_compare, "reference entries for token stats");

    // match-profile
    auto* match = app.add_subcommand(
        "match-profile", "extract a sampling profile from a reference dataset");
    std::string mp_reference;
    std::string mp_backend;
    std::string mp_fixture;
    std::size_t mp_samples = std::size_t(-1);
    std::uint64_t mp_seed = 0;
    std::string mp_out;
    std::string mp_config;
    match->add_option("--reference", mp_reference, "reference entries")->required();
    match->add_option("--backend", mp_backend, "mock | remote");
    match->add_option("--fixture", mp_fixture, "mock analysis fixture JSONL");
    match->add_option("--sample-images", mp_samples, "images to sample (default all)");
    match->add_option("--seed", mp_seed, "sampling seed");
    match->add_option("--out", mp_out, "profile JSON output")->required();
    match->add_option("--config", mp_config, "config file");

    // report
    auto* report = app.add_subcommand("report", "yield report from a rejection ledger");
    std::string rep_ledger;
    long rep_accepted = 0;
    std::string rep_checkpoint;
    bool rep_json = false;
    report->add_option("--ledger", rep_ledger, "ledger JSONL")->required();
    report->add_option("--accepted", rep_accepted, "accepted conversation count");
    report->add_option("--checkpoint", rep_checkpoint,
                       "checkpoint.json to read the accepted count from");
    report->add_flag("--json", rep_json, "emit JSON instead of text");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return cmd_generate(gen_images, gen_config, gen_out, gen_resume);
        }
        if (assemble->parsed()) {
            return cmd_assemble(asm_compositional, asm_vit, asm_fraction, asm_seed,
                                asm_out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(ana_dataset, ana_backend, ana_fixture, ana_samples,
                               ana_seed, ana_out, ana_config, ana_compare);
        }
        if (match->parsed()) {
            return cmd_match_profile(mp_reference, mp_backend, mp_fixture, mp_samples,
                                     mp_seed, mp_out, mp_config);
        }
        if (report->parsed()) {
            return cmd_report(rep_ledger, rep_accepted, rep_checkpoint, rep_json);
        }
    } catch (const std::exception& e) {
        compact::log_error("fatal", {{"error", e.what()}});
        return 1;
    }
    return 0;
}
