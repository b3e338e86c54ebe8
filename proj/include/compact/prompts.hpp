#pragma once

#include <string>
#include <string_view>

#include "compact/taxonomy.hpp"

namespace compact::prompts {

// System prompt for capability analysis: given a question, name every
// capability it requires.
std::string_view analysis_system();

// System prompt for compositional question generation. Contains the full
// capability definition block used by the generation backend.
std::string_view generation_system();

// System prompt for capability verification of a generated question.
std::string_view verification_system();

// Capability definition line as it appears in the generation prompt's
// definition block (differs from the taxonomy table text).
std::string_view generation_definition(Capability c);

// User prompt for a generation call: names and definitions of exactly the
// requested capabilities plus the expected reply shape.
std::string render_generation_user(const Combination& combo);

std::string render_analysis_user(std::string_view question);

std::string render_verification_user(std::string_view question,
                                     std::string_view answer,
                                     const Combination& requested);

}  // namespace compact::prompts
