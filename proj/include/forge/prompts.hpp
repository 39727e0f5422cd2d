#pragma once

#include <string>

#include "forge/util.hpp"

namespace forge {

// Prompt texts are versioned in the repository and their hash is stamped
// into sample metadata, so a corpus can always be traced back to the exact
// instructions that produced it.

inline constexpr const char* kPromptVersion = "prompts-v1";

namespace prompts {

inline constexpr const char* kParaphrase =
    "Rewrite the statement below in N different ways without changing its "
    "meaning. Keep both code entity names exactly as written. Reply with one "
    "numbered paraphrase per line.\n";

inline constexpr const char* kNegativeNaturalize =
    "Rewrite the statement below as a single fluent sentence. Keep every "
    "code entity name exactly as written. Reply with the sentence only.\n";

inline constexpr const char* kTaskDesign =
    "You are designing an exam question about a specific codebase.\n"
    "Principles:\n"
    "- Stay strictly within the provided APIs and code; no generic trivia.\n"
    "- Produce a problem statement, a reference answer, and explicit grading "
    "criteria.\n"
    "- Emit exactly DIFFICULTY grading criteria; align each criterion with "
    "one knowledge unit (one API from the list).\n"
    "- For fill_in_blank and programming formats the reference answer must "
    "be code that uses the listed APIs with correct names, prefixes and "
    "argument counts.\n"
    "Reply with a JSON object: {\"statement\": ..., \"reference_answer\": "
    "..., \"grading_criteria\": [{\"point\": ..., \"entity\": <entity id>}, "
    "...]}.\n";

inline constexpr const char* kTraceGeneration =
    "Solve the task below using only the provided context. Think through the "
    "dependencies first, then give the final answer.\n";

inline constexpr const char* kDecompose =
    "Split the test function below into (1) a functional implementation that "
    "performs the scenario and returns its outcome, (2) assertion code that "
    "calls the functional implementation and checks it, and (3) a one-line "
    "comment describing the functional part's intent.\n"
    "Example (C++): test body `int v = add(2, 3); assert(v == 5);` becomes\n"
    "  functional_code: `bool scenario() { int v = add(2, 3); return v == 5; "
    "}`\n"
    "  assertions: `assert(scenario());`\n"
    "  instruction: `// Returns true when add() combines two values.`\n"
    "Example (Python): test body `v = add(2, 3)\\nassert v == 5` becomes\n"
    "  functional_code: `def scenario():\\n    v = add(2, 3)\\n    return v "
    "== 5`\n"
    "  assertions: `assert scenario()`\n"
    "  instruction: `# Returns True when add() combines two values.`\n"
    "Reply with a JSON object: {\"functional_code\": ..., \"assertions\": "
    "..., \"instruction\": ...}.\n";

inline constexpr const char* kRepair =
    "The code below fails to compile. Use the compiler diagnostics to fix "
    "it. Reply with a JSON object {\"functional_code\": ..., \"assertions\": "
    "...} containing the corrected code.\n";

inline constexpr const char* kJudge =
    "Compare the candidate answer against the reference answer. Reply with "
    "one line: CONSISTENT: <one-line reason> or INCONSISTENT: <one-line "
    "reason>.\n";

}  // namespace prompts

inline std::string prompt_version_hash() {
  Fnv1a64 h;
  h.field(kPromptVersion)
      .field(prompts::kParaphrase)
      .field(prompts::kNegativeNaturalize)
      .field(prompts::kTaskDesign)
      .field(prompts::kTraceGeneration)
      .field(prompts::kDecompose)
      .field(prompts::kRepair)
      .field(prompts::kJudge);
  return h.hex();
}

}  // namespace forge
