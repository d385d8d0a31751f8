/*
 * mgmem - prompt templates and rendering
 *
 * Templates are plain text with {name} placeholders. The set of required
 * placeholders is fixed per template role; rendering is a single pass over
 * the template, so substituted values are never re-scanned.
 */
#pragma once

#include "mgmem/errors.hpp"

#include <map>
#include <string>
#include <vector>

namespace mgmem {

enum class PromptKind {
    Constructor, // fact extraction
    Trigger,     // episode boundary decision
    Episode,     // episode synthesis
    Retriever,   // query rewrite + intent routing
    Judge,       // sufficiency + conflict verification
    Refresher,   // update/delete planning
    AnswerJudge, // CORRECT/WRONG answer grading
    Responder    // final response generation
};

struct PromptSet {
    std::string con;
    std::string tri;
    std::string epi;
    std::string ret;
    std::string jud;
    std::string ref;
    std::string llm_judge;
    std::string resp;

    const std::string& text(PromptKind kind) const;
    std::string& text(PromptKind kind);
};

// Built-in templates.
PromptSet default_prompts();

// Placeholder names a template of the given role must contain.
const std::vector<std::string>& prompt_placeholders(PromptKind kind);

// Config-key name for each template ("con", "tri", ... "resp").
std::string prompt_key(PromptKind kind);

// Throws ConfigError if any template is missing one of its required
// placeholders (catches bad overrides at load time).
void validate_prompt_set(const PromptSet& prompts);

// Substitutes {name} markers for every name present in bindings. Throws
// MissingBindingError when bindings lack a required placeholder. Unknown
// {---} sequences are left verbatim (templates contain literal JSON braces).
std::string render_prompt(const std::string& tmpl,
                          const std::map<std::string, std::string>& bindings,
                          const std::vector<std::string>& required);

} // namespace mgmem
