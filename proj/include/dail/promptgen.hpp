#pragma once

#include <span>
#include <string>
#include <vector>

#include "dail/corpus.hpp"
#include "dail/error.hpp"
#include "dail/tokencount.hpp"

namespace dail::promptgen {

// The five question representations: basic table lines (BS), natural-language
// text (TR), "#"-commented demo style (OD), CREATE TABLE statements (CR) and
// the Alpaca instruction form (AS).
enum class Representation { Basic, TextRep, OpenAIDemo, CodeRep, AlpacaSFT };

enum class RuleImplication { None, NoExplanation, StepByStep };

struct RepresentationConfig {
    Representation kind = Representation::CodeRep;
    bool include_foreign_keys = false;
    RuleImplication rule = RuleImplication::None;

    // Canonical template defaults: OD carries the no-explanation rule, CR
    // always embeds foreign keys in its CREATE TABLE text.
    static RepresentationConfig canonical(Representation kind);
    void normalize();
};

enum class Organization { FullInformation, SqlOnly, DailPairs };

struct OrganizationConfig {
    Organization kind = Organization::DailPairs;
    int k = 0;  // 0 = zero-shot regardless of kind
};

struct RenderedPrompt {
    std::string text;
    int token_count = 0;
    int examples_included = 0;
    RepresentationConfig representation;
    OrganizationConfig organization;
    bool ends_with_select = true;
};

Representation parse_representation(const std::string& name);
Organization parse_organization(const std::string& name);
RuleImplication parse_rule(const std::string& name);
std::string to_string(Representation r);
std::string to_string(Organization o);
std::string to_string(RuleImplication r);

// Zero-shot question representation; ends with the bare token "SELECT".
std::string render_question(const RepresentationConfig& rep, const std::string& question,
                            const Schema& schema);

// One solved example for full-information organization: the question
// representation with its trailing "SELECT" completed by the gold SQL.
std::string render_example(const RepresentationConfig& rep, const Instance& example,
                           const Schema& schema);

// Renders the examples block in prompt order (callers put the most similar
// example last, adjacent to the target). Empty example list → empty string.
std::string render_examples(const OrganizationConfig& org, const RepresentationConfig& rep,
                            std::span<const Instance> examples, const SchemaIndex& schemas);

// Raised when the target representation alone exceeds the budget.
class PromptBudgetError : public Error {
public:
    using Error::Error;
};

// Concatenates examples and target under the token budget
// (context_limit - 200 reserved for the response). `ranked_examples` is in
// priority order, best first; overflow drops from its tail, and the surviving
// examples render in ascending similarity so the best sits next to the target.
RenderedPrompt assemble_prompt(const Instance& target, const Schema& schema,
                               const RepresentationConfig& rep, const OrganizationConfig& org,
                               std::span<const Instance> ranked_examples,
                               const SchemaIndex& schemas, const TokenCounter& counter,
                               int context_limit);

constexpr int kResponseReserve = 200;

} // namespace dail::promptgen
