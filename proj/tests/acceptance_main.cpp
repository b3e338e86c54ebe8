// Acceptance suite: one test case per criterion, one PASS/FAIL line each.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "compact/analyzer.hpp"
#include "compact/assembler.hpp"
#include "compact/genclient.hpp"
#include "compact/io_util.hpp"
#include "compact/mock_backend.hpp"
#include "compact/orchestrator.hpp"
#include "compact/remote_backend.hpp"
#include "compact/sampler.hpp"
#include "compact/verifier.hpp"

using namespace compact;

namespace {

// Prints the criterion verdict when the case unwinds (doctest's REQUIRE
// throws on failure, so reaching `passed()` is the success path).
class Gate {
public:
    explicit Gate(std::string name) : name_(std::move(name)) {}
    ~Gate() {
        std::cout << (ok_ ? "PASS  " : "FAIL  ") << name_ << std::endl;
    }
    void passed() { ok_ = true; }

private:
    std::string name_;
    bool ok_ = false;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::vector<ImageRef> make_images(int count) {
    std::vector<ImageRef> images;
    for (int i = 0; i < count; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "img_%03d", i);
        images.push_back({id, std::string("images/") + id + ".jpg"});
    }
    return images;
}

PipelineConfig base_config(std::uint64_t seed) {
    PipelineConfig config;
    config.worker_count = 8;
    config.seed = seed;
    config.checkpoint_every = 1;
    return config;
}

ConversationCandidate candidate_of(const std::string& image_id, std::string question,
                                   std::string answer, int confidence) {
    return ConversationCandidate{image_id, Combination({Capability::color}),
                                 std::move(question), std::move(answer), confidence, 0};
}

CapabilityMask cyclic_mask(int start, int k) {
    CapabilityMask mask = 0;
    for (int j = 0; j < k; ++j) {
        mask |= static_cast<CapabilityMask>(1u << ((start + j) % kCapabilityCount));
    }
    return mask;
}

// Entries plus scripted per-question analysis records for a list of
// capability masks, `per_image` questions per entry.
struct AnnotatedCorpus {
    std::vector<DatasetEntry> entries;
    std::vector<CapabilityMask> masks;
};

AnnotatedCorpus build_corpus(MockBackend& backend,
                             const std::vector<std::pair<int, long>>& k_counts,
                             const std::string& tag, int per_image) {
    AnnotatedCorpus corpus;
    long index = 0;
    for (const auto& [k, count] : k_counts) {
        for (long i = 0; i < count; ++i) {
            corpus.masks.push_back(
                cyclic_mask(static_cast<int>(index % kCapabilityCount), k));
            ++index;
        }
    }
    DatasetEntry entry;
    int in_entry = 0;
    long image_index = 0;
    for (std::size_t i = 0; i < corpus.masks.size(); ++i) {
        if (in_entry == 0) {
            entry = DatasetEntry{};
            entry.id = tag + "_" + std::to_string(image_index++);
        }
        const std::string question =
            tag + " question " + std::to_string(i) + " please?";
        entry.conversations.push_back(
            {"human", in_entry == 0 ? "<image>\n" + question : question});
        entry.conversations.push_back({"gpt", "ok"});
        backend.add_analysis_record(question, corpus.masks[i]);
        if (++in_entry == per_image || i + 1 == corpus.masks.size()) {
            corpus.entries.push_back(entry);
            in_entry = 0;
        }
    }
    return corpus;
}

DatasetEntry entry_with_token_total(const std::string& id, int total_tokens) {
    DatasetEntry entry;
    entry.id = id;
    std::string question = "<image>\n";
    for (int i = 0; i < total_tokens - 1; ++i) {
        question += "tok" + std::to_string(i) + " ";
    }
    entry.conversations = {{"human", question}, {"gpt", "answer"}};
    return entry;
}

DatasetEntry entry_with_pairs(const std::string& id, int pairs) {
    DatasetEntry entry;
    entry.id = id;
    for (int i = 0; i < pairs; ++i) {
        entry.conversations.push_back(
            {"human", i == 0 ? "<image>\nq?" : "q" + std::to_string(i) + "?"});
        entry.conversations.push_back({"gpt", "a"});
    }
    return entry;
}

}  // namespace

TEST_CASE("criterion 1: overlap oracle") {
    Gate gate("criterion 1: word-overlap oracle (0.70 / 1.0 / 0.0, < 1 s)");
    Stopwatch watch;

    const std::string accepted = "What is the color of the bench in the image?";
    const std::string candidate =
        "What is the color of the bench located in the center of the scene?";
    REQUIRE(overlap(candidate, accepted) == 0.70);

    const VerifierThresholds thresholds;  // overlap 0.60
    std::vector<AcceptedConversation> prior(1);
    prior[0].image_id = "img";
    prior[0].question = accepted;
    const auto result = check(candidate_of("img", candidate, "red", 95),
                              CapabilityVerdict{mask_of(Capability::color), true}, prior,
                              thresholds);
    REQUIRE(std::holds_alternative<RejectionRecord>(result));
    REQUIRE(std::get<RejectionRecord>(result).mode == RejectionMode::high_overlap);

    REQUIRE(overlap(candidate, candidate) == 1.0);
    REQUIRE(overlap("wholly different words", "nothing in common") == 0.0);

    REQUIRE(watch.seconds() < 1.0);
    gate.passed();
}

TEST_CASE("criterion 2: filter-chain fidelity on a 1000-candidate fixture") {
    Gate gate("criterion 2: 21% rejection, mode shares 10/12.5/40/37.5 (±0.5%)");
    Stopwatch watch;

    // 1000 scripted candidates through the mock backend: 706 plain accepts,
    // 84 base+near-duplicate pairs (168 candidates), 21 low-confidence,
    // 26 uninformative, 79 mismatches. Rejections: 210 of 1000 = 21%;
    // shares 21/26/84/79 of 210.
    const VerifierThresholds thresholds;
    const CapabilityMask color = mask_of(Capability::color);
    MockBackend backend;
    GenClient client(backend, GenerationParams{});

    struct Scripted {
        std::string image_id;
        int attempt;
    };
    std::vector<Scripted> script;

    const auto add = [&](const std::string& image_id, int attempt,
                         const std::string& question, const std::string& answer,
                         int confidence, CapabilityMask identified) {
        backend.add_generation_record(image_id, color, attempt, question, answer,
                                      confidence);
        backend.add_analysis_record(question, identified);
        script.push_back({image_id, attempt});
    };

    int image_serial = 0;
    for (int i = 0; i < 706; ++i) {
        const std::string img = "plain_" + std::to_string(image_serial++);
        add(img, 0, "unique question " + std::to_string(i) + "?", "red", 90, color);
    }
    for (int i = 0; i < 84; ++i) {
        const std::string img = "pair_" + std::to_string(image_serial++);
        add(img, 0, "shared one two three four five", "red", 90, color);
        // the retry shares 5 of its 6 unique words with the accepted base
        add(img, 1, "shared one two three four junk", "blue", 90, color);
    }
    for (int i = 0; i < 21; ++i) {
        const std::string img = "conf_" + std::to_string(image_serial++);
        add(img, 0, "confident question " + std::to_string(i) + "?", "red", 69, color);
    }
    for (int i = 0; i < 26; ++i) {
        const std::string img = "uninf_" + std::to_string(image_serial++);
        add(img, 0, "tray text question " + std::to_string(i) + "?", "None", 90, color);
    }
    for (int i = 0; i < 79; ++i) {
        const std::string img = "mm_" + std::to_string(image_serial++);
        // verification identifies object recognition only: 0 of 1 requested
        add(img, 0, "mismatch question " + std::to_string(i) + "?", "red", 90,
            mask_of(Capability::object_recognition));
    }

    std::vector<RejectionRecord> ledger;
    long accepted_count = 0;
    std::map<std::string, std::vector<AcceptedConversation>> accepted_by_image;
    for (const Scripted& item : script) {
        const ConversationCandidate candidate =
            client.generate(item.image_id, "", Combination(color), item.attempt);
        const CapabilityVerdict verdict = client.verify_capabilities(
            candidate.question, candidate.answer, candidate.requested);
        auto& prior = accepted_by_image[item.image_id];
        CheckResult result = check(candidate, verdict, prior, thresholds);
        if (std::holds_alternative<AcceptedConversation>(result)) {
            prior.push_back(std::get<AcceptedConversation>(std::move(result)));
            ++accepted_count;
        } else {
            ledger.push_back(std::get<RejectionRecord>(std::move(result)));
        }
    }

    const YieldReport report = yield_report(ledger, accepted_count);
    REQUIRE(report.attempts == 1000);
    REQUIRE(std::abs(report.rejection_rate - 0.21) <= 0.005);
    REQUIRE(std::abs(report.mode_shares.at(RejectionMode::low_confidence) - 0.100) <=
            0.005);
    REQUIRE(std::abs(report.mode_shares.at(RejectionMode::uninformative_answer) -
                     0.125) <= 0.005);
    REQUIRE(std::abs(report.mode_shares.at(RejectionMode::high_overlap) - 0.400) <=
            0.005);
    REQUIRE(std::abs(report.mode_shares.at(RejectionMode::capability_mismatch) -
                     0.375) <= 0.005);

    REQUIRE(watch.seconds() < 5.0);
    gate.passed();
}

TEST_CASE("criterion 3: loop arithmetic over 50 images") {
    Gate gate("criterion 3: all-accept 450/450, all-reject 10 attempts per (image,k)");
    Stopwatch watch;

    const auto images = make_images(50);

    MockBackend accept_backend(MockPolicy::accept);
    const RunOutput accepted = run(images, base_config(11), accept_backend);
    long total_accepted = 0;
    long total_attempts = 0;
    for (const ImageOutcome& outcome : accepted.result.images) {
        for (int k = 1; k <= 3; ++k) {
            REQUIRE(outcome.per_k.at(k).accepted == 3);
            REQUIRE(outcome.per_k.at(k).attempts == 3);
        }
        total_accepted += static_cast<long>(outcome.accepted.size());
        for (const auto& [k, stats] : outcome.per_k) total_attempts += stats.attempts;
    }
    REQUIRE(total_accepted == 450);
    REQUIRE(total_attempts == 450);

    MockBackend reject_backend(MockPolicy::reject_capability);
    const RunOutput rejected = run(images, base_config(11), reject_backend);
    for (const ImageOutcome& outcome : rejected.result.images) {
        REQUIRE(outcome.accepted.empty());
        REQUIRE(outcome.rejections.size() == 30);
        REQUIRE(outcome.below_floor);
        for (int k = 1; k <= 3; ++k) {
            REQUIRE(outcome.per_k.at(k).attempts == 10);
            REQUIRE(outcome.per_k.at(k).accepted == 0);
        }
    }

    REQUIRE(watch.seconds() < 10.0);
    gate.passed();
}

TEST_CASE("criterion 4: sampler properties over randomized trials") {
    Gate gate("criterion 4: dedup, singleton coverage, exhaustion at C(10,k)+1");
    Stopwatch watch;

    long draws = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (int k = 1; k <= 3; ++k) {
            ImageSamplingState state;
            state.image_id = "img_" + std::to_string(seed);
            Rng rng(seed * 31 + static_cast<std::uint64_t>(k));
            const long total = combination_count(k);
            std::set<CapabilityMask> seen;
            std::set<CapabilityMask> first_ten;
            for (long i = 0; i < total; ++i) {
                const Combination combo = sample_combination(state, k, rng);
                ++draws;
                REQUIRE(combo.k_gen() == k);
                REQUIRE(seen.insert(combo.mask()).second);  // never issued twice
                if (k == 1 && i < 10) first_ten.insert(combo.mask());
            }
            if (k == 1) REQUIRE(first_ten.size() == 10);  // coverage permutation
            // exhaustion exactly at draw C(10,k)+1
            REQUIRE_THROWS_AS(sample_combination(state, k, rng), ExhaustionError);
        }
    }
    REQUIRE(draws >= 10000);

    REQUIRE(watch.seconds() < 30.0);
    gate.passed();
}

TEST_CASE("criterion 5: byte-identical determinism and resume") {
    Gate gate("criterion 5: identical outputs across reruns and checkpoint resume");

    const auto images = make_images(16);
    MockBackend backend(MockPolicy::accept);
    // a scripted low-confidence probe so the ledger is nonempty; quota 10 at
    // k=1 guarantees the probed singleton is drawn on every scripted image
    for (int i = 0; i < 4; ++i) {
        backend.add_generation_record("img_00" + std::to_string(i),
                                      mask_of(Capability::color), -1,
                                      "probe question " + std::to_string(i) + "?",
                                      "fine", 10);
    }
    const auto config_of = [] {
        PipelineConfig config = base_config(2027);
        config.quotas = {{1, 10}, {2, 3}, {3, 3}};
        return config;
    };

    TempDir run_a("compact_acc_run_a");
    TempDir run_b("compact_acc_run_b");
    TempDir run_c("compact_acc_run_c");

    run(images, config_of(), backend, run_a.str());
    run(images, config_of(), backend, run_b.str());
    const std::string comp_a = read_file(run_a.str() + "/compositional.jsonl");
    REQUIRE(comp_a == read_file(run_b.str() + "/compositional.jsonl"));
    const std::string ledger_a = read_file(run_a.str() + "/ledger.jsonl");
    REQUIRE(!ledger_a.empty());
    REQUIRE(ledger_a == read_file(run_b.str() + "/ledger.jsonl"));

    // interrupted at 6 images, then resumed
    PipelineConfig partial = config_of();
    partial.max_images = 6;
    const RunOutput interrupted = run(images, partial, backend, run_c.str());
    REQUIRE_FALSE(interrupted.result.completed);
    run(images, config_of(), backend, run_c.str(), /*resume=*/true);
    REQUIRE(comp_a == read_file(run_c.str() + "/compositional.jsonl"));
    REQUIRE(ledger_a == read_file(run_c.str() + "/ledger.jsonl"));

    // assembled outputs are deterministic too
    const auto compositional = load_entries(run_a.str() + "/compositional.jsonl");
    std::vector<DatasetEntry> pool;
    for (int i = 0; i < 200; ++i) pool.push_back(entry_with_pairs("vit_" + std::to_string(i), 2));
    MixSpec spec;
    spec.vit_fraction = 0.10;
    spec.seed = 404;
    const MixResult mix_a = mix(compositional, pool, spec);
    const MixResult mix_b = mix(compositional, pool, spec);
    REQUIRE(entries_to_jsonl(mix_a.entries) == entries_to_jsonl(mix_b.entries));

    gate.passed();
}

TEST_CASE("criterion 6: assembly arithmetic") {
    Gate gate("criterion 6: 10000 x 0.05 + 2000 = 2500 exact, fraction 0 passthrough");

    std::vector<DatasetEntry> pool;
    for (int i = 0; i < 10000; ++i) {
        pool.push_back(entry_with_pairs("vit_" + std::to_string(i), 3));
    }
    std::vector<DatasetEntry> compositional;
    for (int i = 0; i < 2000; ++i) {
        compositional.push_back(entry_with_pairs("comp_" + std::to_string(i), 4));
    }

    MixSpec spec;
    spec.vit_fraction = 0.05;
    spec.seed = 31337;
    const MixResult result = mix(compositional, pool, spec);
    REQUIRE(result.entries.size() == 2500);
    REQUIRE(result.manifest.at("compositional_count").get<long>() == 2000);
    REQUIRE(result.manifest.at("vit_subset_count").get<long>() == 500);
    REQUIRE(result.manifest.at("total_count").get<long>() == 2500);

    std::set<std::string> vit_ids;
    long vit_count = 0;
    for (const DatasetEntry& entry : result.entries) {
        if (entry.source == "vit_subset") {
            ++vit_count;
            REQUIRE(vit_ids.insert(entry.id).second);  // without replacement
        }
    }
    REQUIRE(vit_count == 500);

    MixSpec passthrough;
    passthrough.vit_fraction = 0.0;
    passthrough.seed = 1;
    const MixResult pure = mix(compositional, pool, passthrough);
    REQUIRE(pure.entries.size() == 2000);
    for (const DatasetEntry& entry : pure.entries) {
        REQUIRE(entry.source == "compositional");
    }

    gate.passed();
}

TEST_CASE("criterion 7: analyzer oracle equivalence and paper-shaped fixtures") {
    Gate gate("criterion 7: brute-force recount, phi 1e-12, 1.95/2 and 2.89/3 shapes");

    // (a) 500 annotated questions: profile_k must equal the direct recount
    {
        MockBackend backend;
        Rng rng(1234);
        std::vector<CapabilityMask> masks;
        for (int i = 0; i < 500; ++i) {
            masks.push_back(static_cast<CapabilityMask>(rng.bounded(1 << 10)));
        }
        AnnotatedCorpus corpus;
        DatasetEntry entry;
        int in_entry = 0;
        int image_index = 0;
        for (std::size_t i = 0; i < masks.size(); ++i) {
            if (in_entry == 0) {
                entry = DatasetEntry{};
                entry.id = "oracle_" + std::to_string(image_index++);
            }
            const std::string question = "oracle question " + std::to_string(i) + "?";
            entry.conversations.push_back(
                {"human", in_entry == 0 ? "<image>\n" + question : question});
            entry.conversations.push_back({"gpt", "ok"});
            backend.add_analysis_record(question, masks[i]);
            if (++in_entry == 5 || i + 1 == masks.size()) {
                corpus.entries.push_back(entry);
                in_entry = 0;
            }
        }

        GenClient client(backend, GenerationParams{});
        const KProfile profile =
            profile_k(corpus.entries, client, corpus.entries.size(), 3);

        std::array<long, kCapabilityCount + 1> recount{};
        double k_sum = 0;
        for (CapabilityMask mask : masks) {
            ++recount[static_cast<std::size_t>(mask_size(mask))];
            k_sum += mask_size(mask);
        }
        REQUIRE(profile.total_questions == 500);
        for (int k = 0; k <= kCapabilityCount; ++k) {
            REQUIRE(profile.histogram[static_cast<std::size_t>(k)] ==
                    recount[static_cast<std::size_t>(k)]);
        }
        REQUIRE(profile.mean_k == doctest::Approx(k_sum / 500.0).epsilon(1e-12));
        long best = -1;
        int mode = 0;
        for (int k = 0; k <= kCapabilityCount; ++k) {
            if (recount[static_cast<std::size_t>(k)] > best) {
                best = recount[static_cast<std::size_t>(k)];
                mode = k;
            }
        }
        REQUIRE(profile.mode_k == mode);

        // (b) phi vs a brute-force 2x2 contingency table, to 1e-12
        const CooccurrenceMatrix matrix = cooccurrence(profile);
        for (int a = 0; a < kCapabilityCount; ++a) {
            for (int b = 0; b < kCapabilityCount; ++b) {
                long n11 = 0;
                long n10 = 0;
                long n01 = 0;
                long n00 = 0;
                for (const QuestionProfile& q : profile.questions) {
                    const bool has_a = (q.capabilities >> a) & 1;
                    const bool has_b = (q.capabilities >> b) & 1;
                    if (has_a && has_b) ++n11;
                    else if (has_a) ++n10;
                    else if (has_b) ++n01;
                    else ++n00;
                }
                const double row1 = static_cast<double>(n11 + n10);
                const double row0 = static_cast<double>(n01 + n00);
                const double col1 = static_cast<double>(n11 + n01);
                const double col0 = static_cast<double>(n10 + n00);
                const auto& cell =
                    matrix.phi[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                if (row1 == 0 || row0 == 0 || col1 == 0 || col0 == 0) {
                    REQUIRE_FALSE(cell.has_value());
                    continue;
                }
                const double expected =
                    (static_cast<double>(n11) * n00 - static_cast<double>(n10) * n01) /
                    std::sqrt(row1 * row0 * col1 * col0);
                REQUIRE(cell.has_value());
                REQUIRE(std::abs(*cell - expected) <= 1e-12);
            }
        }
    }

    // (c) fixture shaped like the reference VIT sample: 5400 questions,
    // mean 1.95, mode 2, 77% with k <= 2, 0.9% with k = 0
    {
        MockBackend backend;
        const AnnotatedCorpus corpus = build_corpus(
            backend,
            {{0, 49}, {1, 1905}, {2, 2204}, {3, 900}, {4, 250}, {5, 60}, {6, 20},
             {7, 6}, {8, 2}, {9, 1}, {10, 3}},
            "llava_shape", 6);
        GenClient client(backend, GenerationParams{});
        const KProfile profile =
            profile_k(corpus.entries, client, corpus.entries.size(), 0);
        REQUIRE(profile.total_questions == 5400);
        REQUIRE(std::abs(profile.mean_k - 1.95) <= 0.01);
        REQUIRE(profile.mode_k == 2);
        REQUIRE(std::abs(profile.share_k_le2 - 0.77) <= 0.01);
        REQUIRE(std::abs(profile.share_k0 - 0.009) <= 0.01);
    }

    // (d) fixture shaped like the compositional output: mean 2.89, mode 3
    {
        MockBackend backend;
        const AnnotatedCorpus corpus = build_corpus(
            backend,
            {{1, 542}, {2, 1658}, {3, 3400}, {4, 1300}, {5, 250}, {6, 50}},
            "comp_shape", 8);
        GenClient client(backend, GenerationParams{});
        const KProfile profile =
            profile_k(corpus.entries, client, corpus.entries.size(), 0);
        REQUIRE(profile.total_questions == 7200);
        REQUIRE(std::abs(profile.mean_k - 2.89) <= 0.01);
        REQUIRE(profile.mode_k == 3);
    }

    gate.passed();
}

TEST_CASE("criterion 8: token statistics and conversations per image") {
    Gate gate("criterion 8: 46.88% token reduction, 5.18 mean pairs, 97.69% <= 20");

    // per-entry token totals averaging 104.87 and 197.42 over 100 entries each
    std::vector<DatasetEntry> ours;
    std::vector<DatasetEntry> reference;
    for (int i = 0; i < 99; ++i) {
        ours.push_back(entry_with_token_total("ours_" + std::to_string(i), 105));
        reference.push_back(entry_with_token_total("ref_" + std::to_string(i), 197));
    }
    ours.push_back(entry_with_token_total("ours_last", 92));
    reference.push_back(entry_with_token_total("ref_last", 239));

    const TokenStats ours_stats = token_stats(ours);
    const TokenStats reference_stats = token_stats(reference);
    REQUIRE(ours_stats.tokens_per_entry == doctest::Approx(104.87).epsilon(1e-12));
    REQUIRE(reference_stats.tokens_per_entry == doctest::Approx(197.42).epsilon(1e-12));
    const double reduction = token_reduction_percent(ours_stats, reference_stats);
    REQUIRE(std::abs(reduction - 46.88) <= 0.01);

    // conversation histogram: 7873 x 5, 1896 x 4, 231 x 21 pairs
    std::vector<DatasetEntry> dataset;
    int serial = 0;
    for (int i = 0; i < 7873; ++i) {
        dataset.push_back(entry_with_pairs("five_" + std::to_string(serial++), 5));
    }
    for (int i = 0; i < 1896; ++i) {
        dataset.push_back(entry_with_pairs("four_" + std::to_string(serial++), 4));
    }
    for (int i = 0; i < 231; ++i) {
        dataset.push_back(entry_with_pairs("long_" + std::to_string(serial++), 21));
    }
    const ConversationsPerImage stats = conversations_per_image(dataset);
    REQUIRE(stats.images == 10000);
    REQUIRE(std::abs(stats.mean - 5.18) <= 0.01);
    REQUIRE(std::abs(stats.share_le20 - 0.9769) <= 0.0001);

    gate.passed();
}

TEST_CASE("criterion 9: profile-matched sampling reproduces the reference") {
    Gate gate("criterion 9: 10000 profile draws match the k histogram within 2%/bin");

    // reference corpus with k support {1, 2, 3}: 30% / 50% / 20%
    std::vector<QuestionProfile> questions;
    for (int i = 0; i < 1500; ++i) {
        questions.push_back({"img", "a" + std::to_string(i) + "?", cyclic_mask(i, 1)});
    }
    for (int i = 0; i < 2500; ++i) {
        questions.push_back({"img", "b" + std::to_string(i) + "?", cyclic_mask(i, 2)});
    }
    for (int i = 0; i < 1000; ++i) {
        questions.push_back({"img", "c" + std::to_string(i) + "?", cyclic_mask(i, 3)});
    }
    const KProfile reference = profile_from_annotations(std::move(questions));
    const DistributionProfile profile = extract_profile(reference);

    const long reference_total = reference.total_questions;
    std::array<double, 4> reference_share{};
    for (int k = 1; k <= 3; ++k) {
        reference_share[static_cast<std::size_t>(k)] =
            static_cast<double>(reference.histogram[static_cast<std::size_t>(k)]) /
            static_cast<double>(reference_total);
    }

    Rng rng(777);
    std::array<long, 4> drawn{};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        ImageSamplingState state;
        state.image_id = "img";
        ++drawn[static_cast<std::size_t>(
            sample_from_profile(profile, state, rng).k_gen())];
    }
    for (int k = 1; k <= 3; ++k) {
        const double share =
            static_cast<double>(drawn[static_cast<std::size_t>(k)]) / draws;
        REQUIRE(std::abs(share - reference_share[static_cast<std::size_t>(k)]) < 0.02);
    }

    gate.passed();
}

TEST_CASE("criterion 10: k_final lower bound holds across a full pipeline run") {
    Gate gate("criterion 10: every accepted conversation satisfies k_final >= k_gen");

    MockBackend backend(MockPolicy::accept);
    // scripted questions whose verification identifies one extra capability
    const std::array<const char*, 5> probe_questions = {
        "zebra quartz marble?", "violet mango breeze?", "copper lantern drift?",
        "ember willow stone?", "prism falcon tide?"};
    const std::array<const char*, 5> pair_questions = {
        "saffron glacier moth?", "indigo harbor flame?", "cedar comet veil?",
        "onyx meadow spark?", "lilac canyon frost?"};
    for (int i = 0; i < 5; ++i) {
        const std::string image = "img_00" + std::to_string(i);
        backend.add_generation_record(image, mask_of(Capability::color), -1,
                                      probe_questions[static_cast<std::size_t>(i)],
                                      "red", 95);
        backend.add_analysis_record(probe_questions[static_cast<std::size_t>(i)],
                                    mask_of(Capability::color) |
                                        mask_of(Capability::object_recognition));
        const CapabilityMask pair =
            mask_of(Capability::shape) | mask_of(Capability::counting);
        backend.add_generation_record(image, pair, -1,
                                      pair_questions[static_cast<std::size_t>(i)],
                                      "three", 95);
        backend.add_analysis_record(pair_questions[static_cast<std::size_t>(i)],
                                    pair | mask_of(Capability::object_recognition));
    }

    // quota 10 at k=1 walks all ten singletons, so every scripted image
    // passes through the color probe exactly once
    PipelineConfig config = base_config(5);
    config.quotas = {{1, 10}, {2, 3}, {3, 3}};

    const RunOutput output = run(make_images(20), config, backend);
    long violations = 0;
    long inflated = 0;
    std::vector<CapabilityMask> requested;
    std::vector<CapabilityMask> identified;
    for (const ImageOutcome& outcome : output.result.images) {
        for (const AcceptedConversation& conv : outcome.accepted) {
            if (conv.k_final < conv.k_gen) ++violations;
            if (conv.k_final > conv.k_gen) ++inflated;
            requested.push_back(conv.requested);
            identified.push_back(conv.identified);
        }
    }
    REQUIRE(violations == 0);
    REQUIRE(inflated >= 5);  // the scripted inflations were exercised

    const auto inflation = capability_inflation(requested, identified);
    REQUIRE(inflation[static_cast<std::size_t>(Capability::object_recognition)] >=
            inflated);

    gate.passed();
}

TEST_CASE("criterion 11: budget accounting and optional live smoke") {
    Gate gate("criterion 11: unmetered estimate = calls x 700; live smoke optional");

    MockBackend backend(MockPolicy::accept);
    const RunOutput output = run(make_images(3), base_config(1), backend);
    const BudgetReport report = budget_report(output.result.counters, 0.0);
    REQUIRE(report.metered_tokens == 0);
    REQUIRE(report.estimated_tokens == report.calls * 700);

    const char* api_key = std::getenv("COMPACT_API_KEY");
    const char* endpoint = std::getenv("COMPACT_LIVE_ENDPOINT");
    if (api_key != nullptr && endpoint != nullptr) {
        RemoteBackendOptions options;
        options.endpoint = endpoint;
        RemoteBackend remote(options);
        GenClient client(remote, GenerationParams{});
        for (int i = 0; i < 5; ++i) {
            const CapabilityMask mask =
                client.analyze_capabilities("What color is the car in image " +
                                            std::to_string(i) + "?");
            (void)mask;  // protocol-level smoke: no reply-content assertions
        }
        std::cout << "        live smoke ran against " << endpoint << std::endl;
    } else {
        std::cout << "        live smoke skipped (COMPACT_API_KEY / "
                     "COMPACT_LIVE_ENDPOINT unset)"
                  << std::endl;
    }

    gate.passed();
}
