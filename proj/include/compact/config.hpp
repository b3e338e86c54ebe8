#pragma once

#include <string>

#include "compact/assembler.hpp"
#include "compact/orchestrator.hpp"

namespace compact {

struct BackendConfig {
    std::string kind = "mock";  // mock | remote
    std::string endpoint;       // remote completion URL
    std::string api_key_env = "COMPACT_API_KEY";
    std::string fixture;  // mock fixture JSONL path
    std::string mock_policy = "accept";
    bool report_usage = false;
    int max_retries = 3;
    int max_inflight = 32;
    double price_per_1k_tokens = 0.0;

    void validate() const;
};

struct FullConfig {
    PipelineConfig pipeline;
    BackendConfig backend;
    MixSpec assembly;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parses a sectioned key = value file ([pipeline] / [thresholds] /
// [generation] / [backend] / [assembly]); missing keys keep their defaults,
// an empty path yields the full default config. Unknown keys and
// out-of-range values raise ConfigError naming the key (with a nearest-key
// suggestion for likely typos).
FullConfig load_config(const std::string& path);

// Parses config text directly (same format).
FullConfig parse_config(const std::string& text, const std::string& origin = "<config>");

}  // namespace compact
