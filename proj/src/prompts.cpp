#include "compact/prompts.hpp"

#include <array>

namespace compact::prompts {

namespace {

constexpr std::string_view kAnalysisSystem =
    R"(You are an AI assistant that analyzes questions to identify the core capabilities required to answer them.

Given a question, identify ALL the capabilities it requires from this list:
- spatial relationship (understanding relative positions)
- object interaction (how objects/people interact)
- scene understanding (understanding the background)
- text recognition (reading text in images)
- spatial recognition (understanding 3D space)
- action recognition (identifying actions/activities)
- object recognition (identifying objects)
- counting (counting objects/people)
- color (identifying colors)
- shape (identifying shapes)

Return ONLY a JSON array of the required capabilities, like:
["capability1", "capability2"])";

// Definition lines for the generation prompt, indexed by Capability value.
constexpr std::array<std::string_view, kCapabilityCount> kGenerationDefinitions = {
    "color: Identifying or comparing colors of objects in the image",
    "shape: Recognizing and describing the shapes of objects in the image",
    "object_recognition: Identifying and naming objects present in the image",
    "action_recognition: Identifying what action is being performed (can involve a "
    "single person/object)",
    "text_recognition: Reading and interpreting text visible in the image",
    "spatial_recognition: Understanding the overall spatial layout and arrangement of "
    "the entire scene - focuses on the general organization, depth, perspective, or "
    "environmental context, rather than relationships between specific objects",
    "counting: Determining the number of instances of something in the image",
    "spatial_relationship: Identifying how specific objects are positioned relative to "
    "each other (above, below, next to, inside, etc.) - focuses on the direct "
    "relationship between two or more particular objects",
    "object_interaction: Analyzing how multiple objects interact with each other "
    "(requires at least two objects) - MUST involve at least one moving/active object, "
    "not just static objects positioned together - can include humans interacting with "
    "objects and humans interacting with humans",
    "scene_understanding: Identifying where the image is taken or the type of "
    "environment/setting (indoor/outdoor, beach, mountain, kitchen, office, etc.) - "
    "focuses on identifying the overall scene, background, or context of the image",
};

// Definition block order in the generation prompt.
constexpr std::array<Capability, kCapabilityCount> kDefinitionOrder = {
    Capability::spatial_relationship, Capability::spatial_recognition,
    Capability::text_recognition,     Capability::action_recognition,
    Capability::object_interaction,   Capability::object_recognition,
    Capability::counting,             Capability::color,
    Capability::shape,                Capability::scene_understanding,
};

const std::string& generation_system_text() {
    static const std::string text = [] {
        std::string s =
            R"(You are an AI assistant that generates challenging but well-defined questions and answers about images. First, I will provide you with k specific capabilities. Generate 1 question that naturally integrates EXACTLY these k capabilities.

IMPORTANT:
- If the question can be answered without looking at the image (e.g., the answer can be inferred from the question itself or previous questions), it's a BAD question
- Questions should be reasonably challenging but must have clear, unambiguous answers
- All answers must be extremely concise - use only a single word or short phrase
- Each question must be a single, integrated question that naturally combines all k given capabilities
- DO NOT use "and" or commas to combine separate questions
- Questions should require careful observation and reasoning
- Only generate questions when you can determine the answer with high confidence
- Avoid subjective or ambiguous questions
- ONLY ask about objects and capabilities that are ACTUALLY PRESENT in the image
- NEVER create questions about objects or features that don't exist in the image
- Generate diverse questions that differ in topic and required reasoning

CAPABILITY DEFINITIONS:
)";
        for (Capability c : kDefinitionOrder) {
            s += "- ";
            s += kGenerationDefinitions[static_cast<std::size_t>(c)];
            s += '\n';
        }
        s += R"(
Examples:
- BAD: "What color is the car, and where is it located?" (two separate questions)
- BAD: "What might the person be thinking?" (subjective/ambiguous)
- BAD: "Is this a nice room?" (subjective)
- BAD: "What breed of dog is in the corner?" (when no dog exists in the image)
- BAD: "How are the fridge and desk interacting?" (static objects don't qualify as interaction)
- BAD: "What is the color of the red car?" (answer can be inferred from the question itself without seeing the image)
- GOOD: "What color car is parked next to the red brick building?" (specific, clear answer)
- GOOD: "How many yellow tennis balls are visible on the wooden court?" (requires counting + color)
- GOOD: "What is the person in blue using to interact with the television?" (proper object interaction)
- GOOD: "Where is this image taken?" (scene understanding)
- GOOD: "Where is this scene happening?" (scene understanding))";
        return s;
    }();
    return text;
}

constexpr std::string_view kVerificationSystem =
    R"(You are an AI assistant that verifies if questions about images properly utilize specified capabilities.

Given a question and its answer, analyze whether it NATURALLY requires using EXACTLY k specified capabilities - no more, no less.

IMPORTANT:
- The question should require ALL specified capabilities to be answered
- The question should not require additional major capabilities beyond those specified
- The capabilities must be naturally integrated, not artificially forced

Return ONLY a JSON array of the capabilities the question actually requires, like:
["capability1", "capability2"])";

std::string join_names(const Combination& combo) {
    std::string names;
    for (Capability c : combo.members()) {
        if (!names.empty()) names += ", ";
        names += to_string(c);
    }
    return names;
}

}  // namespace

std::string_view analysis_system() { return kAnalysisSystem; }

std::string_view generation_system() { return generation_system_text(); }

std::string_view verification_system() { return kVerificationSystem; }

std::string_view generation_definition(Capability c) {
    return kGenerationDefinitions[static_cast<std::size_t>(c)];
}

std::string render_generation_user(const Combination& combo) {
    const int k = combo.k_gen();
    std::string s = "Selected capabilities (k=" + std::to_string(k) +
                    "): " + join_names(combo) + "\n";
    for (Capability c : combo.members()) {
        s += "- ";
        s += generation_definition(c);
        s += '\n';
    }
    s += "\nGenerate 1 question about the provided image that naturally integrates "
         "EXACTLY these " +
         std::to_string(k) +
         " capabilities, the concise answer, and your confidence in the quality of "
         "the conversation.\n"
         "Return ONLY a JSON object like:\n"
         R"({"question": "...", "answer": "...", "confidence": 95})";
    return s;
}

std::string render_analysis_user(std::string_view question) {
    std::string s = "Question: ";
    s += question;
    return s;
}

std::string render_verification_user(std::string_view question, std::string_view answer,
                                     const Combination& requested) {
    std::string s = "Specified capabilities (k=" + std::to_string(requested.k_gen()) +
                    "): " + join_names(requested) + "\n";
    s += "Question: ";
    s += question;
    s += "\nAnswer: ";
    s += answer;
    return s;
}

}  // namespace compact::prompts
