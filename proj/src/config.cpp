#include "compact/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <vector>

#include "compact/io_util.hpp"

namespace compact {

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "pipeline.workers",        "pipeline.quota",
        "pipeline.quotas",         "pipeline.floor",
        "pipeline.attempt_cap",    "pipeline.seed",
        "pipeline.checkpoint_every", "pipeline.max_images",
        "pipeline.profile",        "pipeline.profile_quota",
        "thresholds.confidence",   "thresholds.overlap",
        "thresholds.uninformative",
        "generation.temperature",  "generation.top_p",
        "generation.max_tokens",   "generation.model",
        "generation.strict_capability_match",
        "backend.kind",            "backend.endpoint",
        "backend.api_key_env",     "backend.fixture",
        "backend.mock_policy",     "backend.report_usage",
        "backend.max_retries",     "backend.max_inflight",
        "backend.price_per_1k_tokens",
        "assembly.vit_fraction",   "assembly.shuffle_seed",
    };
    return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t above = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diagonal = above;
        }
    }
    return row[b.size()];
}

std::string suggest_key(const std::string& unknown) {
    std::string best;
    std::size_t best_distance = 4;  // suggest only close misses
    for (const std::string& key : known_keys()) {
        // compare both the full dotted key and its bare name
        const std::string bare = key.substr(key.find('.') + 1);
        for (const std::string& candidate : {key, bare}) {
            const std::size_t d = edit_distance(unknown, candidate);
            if (d < best_distance) {
                best_distance = d;
                best = key;
            }
        }
    }
    return best;
}

std::string trim(std::string_view text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::string unquote(const std::string& value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

long parse_int(const std::string& key, const std::string& value) {
    long out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": expected a nonnegative integer, got \"" + value + "\"");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t consumed = 0;
        const double out = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got \"" + value + "\"");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(key + ": expected true or false, got \"" + value + "\"");
}

std::map<int, int> parse_quotas(const std::string& key, const std::string& value) {
    std::map<int, int> quotas;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t next = value.find(',', pos);
        if (next == std::string::npos) next = value.size();
        const std::string part = trim(value.substr(pos, next - pos));
        if (!part.empty()) {
            const std::size_t colon = part.find(':');
            if (colon == std::string::npos) {
                throw ConfigError(key + ": entries must look like k:quota, got \"" +
                                  part + "\"");
            }
            quotas[static_cast<int>(parse_int(key, trim(part.substr(0, colon))))] =
                static_cast<int>(parse_int(key, trim(part.substr(colon + 1))));
        }
        if (next == value.size()) break;
        pos = next + 1;
    }
    if (quotas.empty()) throw ConfigError(key + ": no quota entries");
    return quotas;
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t next = value.find(',', pos);
        if (next == std::string::npos) next = value.size();
        const std::string item = trim(value.substr(pos, next - pos));
        if (!item.empty()) items.push_back(item);
        if (next == value.size()) break;
        pos = next + 1;
    }
    return items;
}

bool is_known_key(const std::string& qualified) {
    return std::find(known_keys().begin(), known_keys().end(), qualified) !=
           known_keys().end();
}

void apply(FullConfig& config, const std::string& section, const std::string& key,
           const std::string& raw_value) {
    const std::string qualified = section + "." + key;
    const std::string value = unquote(raw_value);

    PipelineConfig& pipeline = config.pipeline;
    if (qualified == "pipeline.workers") {
        pipeline.worker_count = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "pipeline.quota") {
        const int quota = static_cast<int>(parse_int(qualified, value));
        pipeline.quotas = {{1, quota}, {2, quota}, {3, quota}};
    } else if (qualified == "pipeline.quotas") {
        pipeline.quotas = parse_quotas(qualified, value);
    } else if (qualified == "pipeline.floor") {
        pipeline.floor = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "pipeline.attempt_cap") {
        pipeline.attempt_cap = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "pipeline.seed") {
        pipeline.seed = parse_u64(qualified, value);
    } else if (qualified == "pipeline.checkpoint_every") {
        pipeline.checkpoint_every = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "pipeline.max_images") {
        pipeline.max_images = static_cast<std::size_t>(parse_u64(qualified, value));
    } else if (qualified == "pipeline.profile") {
        if (!value.empty()) pipeline.profile = DistributionProfile::load(value);
    } else if (qualified == "pipeline.profile_quota") {
        pipeline.profile_quota = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "thresholds.confidence") {
        pipeline.thresholds.confidence = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "thresholds.overlap") {
        pipeline.thresholds.overlap = parse_double(qualified, value);
    } else if (qualified == "thresholds.uninformative") {
        pipeline.thresholds.uninformative = parse_list(value);
    } else if (qualified == "generation.temperature") {
        pipeline.params.temperature = parse_double(qualified, value);
    } else if (qualified == "generation.top_p") {
        pipeline.params.top_p = parse_double(qualified, value);
    } else if (qualified == "generation.max_tokens") {
        pipeline.params.max_tokens = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "generation.model") {
        pipeline.params.model_name = value;
    } else if (qualified == "generation.strict_capability_match") {
        pipeline.strict_capability_match = parse_bool(qualified, value);
    } else if (qualified == "backend.kind") {
        config.backend.kind = value;
    } else if (qualified == "backend.endpoint") {
        config.backend.endpoint = value;
    } else if (qualified == "backend.api_key_env") {
        config.backend.api_key_env = value;
    } else if (qualified == "backend.fixture") {
        config.backend.fixture = value;
    } else if (qualified == "backend.mock_policy") {
        config.backend.mock_policy = value;
    } else if (qualified == "backend.report_usage") {
        config.backend.report_usage = parse_bool(qualified, value);
    } else if (qualified == "backend.max_retries") {
        config.backend.max_retries = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "backend.max_inflight") {
        config.backend.max_inflight = static_cast<int>(parse_int(qualified, value));
    } else if (qualified == "backend.price_per_1k_tokens") {
        config.backend.price_per_1k_tokens = parse_double(qualified, value);
    } else if (qualified == "assembly.vit_fraction") {
        config.assembly.vit_fraction = parse_double(qualified, value);
    } else if (qualified == "assembly.shuffle_seed") {
        config.assembly.seed = parse_u64(qualified, value);
    }
}

void validate(const FullConfig& config) {
    try {
        config.pipeline.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    config.backend.validate();
    if (config.assembly.vit_fraction < 0.0 || config.assembly.vit_fraction > 1.0) {
        throw ConfigError("assembly.vit_fraction must be in [0, 1]");
    }
}

}  // namespace

void BackendConfig::validate() const {
    if (kind != "mock" && kind != "remote") {
        throw ConfigError("backend.kind must be mock or remote, got \"" + kind + "\"");
    }
    if (kind == "remote" && endpoint.empty()) {
        throw ConfigError("backend.endpoint is required for the remote backend");
    }
    if (mock_policy != "accept" && mock_policy != "reject_capability" &&
        mock_policy != "error") {
        throw ConfigError(
            "backend.mock_policy must be accept, reject_capability or error");
    }
    if (max_retries < 0) throw ConfigError("backend.max_retries must be >= 0");
    if (max_inflight < 1) throw ConfigError("backend.max_inflight must be >= 1");
    if (price_per_1k_tokens < 0.0) {
        throw ConfigError("backend.price_per_1k_tokens must be >= 0");
    }
}

FullConfig parse_config(const std::string& text, const std::string& origin) {
    FullConfig config;
    std::string section;
    std::vector<std::string> unknown;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find('\n', pos);
        if (next == std::string::npos) next = text.size();
        ++line_no;
        std::string line = trim(text.substr(pos, next - pos));
        pos = next + 1;
        if (line.empty() || line.front() == '#') {
            if (next == text.size()) break;
            continue;
        }
        const std::string where = origin + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> sections = {
                "pipeline", "thresholds", "generation", "backend", "assembly"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigError(where + ": unknown section \"" + section + "\"");
            }
        } else {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(where + ": expected key = value");
            }
            if (section.empty()) {
                throw ConfigError(where + ": key outside any [section]");
            }
            // strip trailing comment on unquoted values
            std::string value = trim(line.substr(eq + 1));
            if (!value.empty() && value.front() != '"') {
                const std::size_t hash = value.find('#');
                if (hash != std::string::npos) value = trim(value.substr(0, hash));
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string qualified = section + "." + key;
            if (!is_known_key(qualified)) {
                std::string message = where + ": unknown key \"" + qualified + "\"";
                const std::string suggestion = suggest_key(qualified);
                if (!suggestion.empty()) {
                    message += "; did you mean \"" + suggestion + "\"?";
                }
                unknown.push_back(std::move(message));
            } else {
                apply(config, section, key, value);
            }
        }
        if (next == text.size()) break;
    }
    if (!unknown.empty()) {
        std::string message = "unknown config keys:";
        for (const std::string& entry : unknown) message += "\n  " + entry;
        throw ConfigError(message);
    }
    validate(config);
    return config;
}

FullConfig load_config(const std::string& path) {
    if (path.empty()) {
        FullConfig config;
        validate(config);
        return config;
    }
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path);
    }
    return parse_config(read_file(path), path);
}

}  // namespace compact
