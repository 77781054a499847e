#include "dail/promptgen.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace dail::promptgen {
namespace {

const char* kNoExplanationRule = "Complete sqlite SQL query only and with no explanation";
const char* kStepByStepRule = "Let's think step by step";

const char* rule_sentence(RuleImplication rule) {
    switch (rule) {
        case RuleImplication::NoExplanation: return kNoExplanationRule;
        case RuleImplication::StepByStep: return kStepByStepRule;
        case RuleImplication::None: break;
    }
    return "";
}

std::string join_columns(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ", ";
        out += table.columns[i].name;
    }
    return out;
}

// "Foreign_keys = [t1.c1 = t2.c2, ...]"
std::string foreign_key_block(const Schema& schema) {
    std::string out = "Foreign_keys = [";
    for (std::size_t i = 0; i < schema.foreign_keys.size(); ++i) {
        const auto& fk = schema.foreign_keys[i];
        if (i) out += ", ";
        out += fk.from_table + "." + fk.from_column + " = " + fk.to_table + "." + fk.to_column;
    }
    out += "]";
    return out;
}

std::string render_basic(const RepresentationConfig& rep, const std::string& question,
                         const Schema& schema) {
    std::ostringstream os;
    if (rep.rule != RuleImplication::None) {
        os << rule_sentence(rep.rule) << "\n";
    }
    for (const Table& t : schema.tables) {
        os << "Table " << t.name << ", columns = [" << join_columns(t) << "]\n";
    }
    if (rep.include_foreign_keys) {
        os << foreign_key_block(schema) << "\n";
    }
    os << "Q: " << question << "\n";
    os << "A: SELECT";
    return os.str();
}

std::string render_text(const RepresentationConfig& rep, const std::string& question,
                        const Schema& schema) {
    std::ostringstream os;
    if (rep.rule != RuleImplication::None) {
        os << rule_sentence(rep.rule) << "\n";
    }
    os << "Given the following database schema:\n";
    for (const Table& t : schema.tables) {
        os << t.name << ": " << join_columns(t) << "\n";
    }
    if (rep.include_foreign_keys) {
        os << foreign_key_block(schema) << "\n";
    }
    os << "\nAnswer the following: " << question << "\n";
    os << "SELECT";
    return os.str();
}

std::string render_openai_demo(const RepresentationConfig& rep, const std::string& question,
                               const Schema& schema) {
    std::ostringstream os;
    if (rep.rule != RuleImplication::None) {
        os << "### " << rule_sentence(rep.rule) << "\n";
    }
    os << "### SQLite SQL tables, with their properties:\n";
    os << "# \n";
    for (const Table& t : schema.tables) {
        os << "# " << t.name << "(" << join_columns(t) << ")\n";
    }
    if (rep.include_foreign_keys) {
        os << "# " << foreign_key_block(schema) << "\n";
    }
    os << "# \n";
    os << "### " << question << "\n";
    os << "SELECT";
    return os.str();
}

std::string render_create_table(const Schema& schema) {
    std::ostringstream os;
    for (std::size_t t = 0; t < schema.tables.size(); ++t) {
        const Table& table = schema.tables[t];
        if (t) os << "\n\n";
        os << "CREATE TABLE " << table.name << "(";
        std::vector<std::string> lines;
        for (const Column& c : table.columns) {
            std::string line = c.name;
            if (!c.sql_type.empty()) line += " " + c.sql_type;
            if (c.is_primary_key) line += " primary key";
            lines.push_back(std::move(line));
        }
        for (const ForeignKey& fk : schema.foreign_keys) {
            if (fk.from_table != table.name) continue;
            lines.push_back("foreign key(" + fk.from_column + ") references " + fk.to_table + "(" +
                            fk.to_column + ")");
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            os << "\n    " << lines[i];
            if (i + 1 < lines.size()) os << ",";
        }
        os << "\n);";
    }
    return os.str();
}

std::string render_code(const RepresentationConfig& rep, const std::string& question,
                        const Schema& schema) {
    std::ostringstream os;
    if (rep.rule != RuleImplication::None) {
        os << "/* " << rule_sentence(rep.rule) << " */\n";
    }
    os << "/* Given the following database schema: */\n";
    os << render_create_table(schema) << "\n";
    os << "\n/* Answer the following: " << question << " */\n";
    os << "SELECT";
    return os.str();
}

std::string render_alpaca(const RepresentationConfig& rep, const std::string& question,
                          const Schema& schema) {
    std::ostringstream os;
    os << "Below is an instruction that describes a task, paired with an input that provides "
          "further context. Write a response that appropriately completes the request.\n\n";
    os << "### Instruction:\n";
    os << "Write a sql to answer the question \"" << question << "\"\n";
    if (rep.rule != RuleImplication::None) {
        os << rule_sentence(rep.rule) << "\n";
    }
    os << "\n### Input:\n";
    for (const Table& t : schema.tables) {
        os << t.name << "(" << join_columns(t) << ")\n";
    }
    if (rep.include_foreign_keys) {
        os << foreign_key_block(schema) << "\n";
    }
    os << "\n### Response:\n";
    os << "SELECT";
    return os.str();
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

RepresentationConfig RepresentationConfig::canonical(Representation kind) {
    RepresentationConfig cfg;
    cfg.kind = kind;
    cfg.rule = (kind == Representation::OpenAIDemo) ? RuleImplication::NoExplanation
                                                    : RuleImplication::None;
    cfg.include_foreign_keys = false;
    cfg.normalize();
    return cfg;
}

void RepresentationConfig::normalize() {
    // CR's CREATE TABLE text always carries the keys.
    if (kind == Representation::CodeRep) {
        include_foreign_keys = true;
    }
}

Representation parse_representation(const std::string& name) {
    std::string n;
    for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "bs_p" || n == "basic") return Representation::Basic;
    if (n == "tr_p" || n == "text") return Representation::TextRep;
    if (n == "od_p" || n == "openai_demo" || n == "openai") return Representation::OpenAIDemo;
    if (n == "cr_p" || n == "code") return Representation::CodeRep;
    if (n == "as_p" || n == "alpaca" || n == "alpaca_sft") return Representation::AlpacaSFT;
    throw ConfigError("unknown representation: " + name);
}

Organization parse_organization(const std::string& name) {
    std::string n;
    for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "fi_o" || n == "full" || n == "full_information") return Organization::FullInformation;
    if (n == "so_o" || n == "sql_only" || n == "sql-only") return Organization::SqlOnly;
    if (n == "dail_o" || n == "dail" || n == "pairs") return Organization::DailPairs;
    throw ConfigError("unknown organization: " + name);
}

RuleImplication parse_rule(const std::string& name) {
    std::string n;
    for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (n == "none" || n.empty()) return RuleImplication::None;
    if (n == "no_explanation") return RuleImplication::NoExplanation;
    if (n == "step_by_step") return RuleImplication::StepByStep;
    throw ConfigError("unknown rule implication: " + name);
}

std::string to_string(Representation r) {
    switch (r) {
        case Representation::Basic: return "BS_P";
        case Representation::TextRep: return "TR_P";
        case Representation::OpenAIDemo: return "OD_P";
        case Representation::CodeRep: return "CR_P";
        case Representation::AlpacaSFT: return "AS_P";
    }
    return "?";
}

std::string to_string(Organization o) {
    switch (o) {
        case Organization::FullInformation: return "FI_O";
        case Organization::SqlOnly: return "SO_O";
        case Organization::DailPairs: return "DAIL_O";
    }
    return "?";
}

std::string to_string(RuleImplication r) {
    switch (r) {
        case RuleImplication::None: return "none";
        case RuleImplication::NoExplanation: return "no_explanation";
        case RuleImplication::StepByStep: return "step_by_step";
    }
    return "?";
}

std::string render_question(const RepresentationConfig& rep, const std::string& question,
                            const Schema& schema) {
    switch (rep.kind) {
        case Representation::Basic: return render_basic(rep, question, schema);
        case Representation::TextRep: return render_text(rep, question, schema);
        case Representation::OpenAIDemo: return render_openai_demo(rep, question, schema);
        case Representation::CodeRep: return render_code(rep, question, schema);
        case Representation::AlpacaSFT: return render_alpaca(rep, question, schema);
    }
    throw ConfigError("unknown representation kind");
}

std::string render_example(const RepresentationConfig& rep, const Instance& example,
                           const Schema& schema) {
    std::string text = render_question(rep, example.question, schema);
    std::string sql = trim(example.gold_sql);
    // The template ends with the bare "SELECT"; the gold query completes it.
    if (starts_with_ci(sql, "select") || starts_with_ci(sql, "with")) {
        text.resize(text.size() - 6);
        return text + sql;
    }
    return text + " " + sql;
}

std::string render_examples(const OrganizationConfig& org, const RepresentationConfig& rep,
                            std::span<const Instance> examples, const SchemaIndex& schemas) {
    if (examples.empty() || org.k == 0) return "";
    std::ostringstream os;
    switch (org.kind) {
        case Organization::FullInformation: {
            for (std::size_t i = 0; i < examples.size(); ++i) {
                if (i) os << "\n\n";
                os << render_example(rep, examples[i], schemas.at(examples[i].db_id));
            }
            break;
        }
        case Organization::SqlOnly: {
            os << "/* Some SQL examples are provided based on similar problems: */";
            for (std::size_t i = 0; i < examples.size(); ++i) {
                os << (i ? "\n\n" : "\n") << trim(examples[i].gold_sql);
            }
            break;
        }
        case Organization::DailPairs: {
            os << "/* Some example questions and corresponding SQL queries are provided based on "
                  "similar problems: */";
            for (std::size_t i = 0; i < examples.size(); ++i) {
                os << (i ? "\n\n" : "\n") << "/* Answer the following: " << examples[i].question
                   << " */\n" << trim(examples[i].gold_sql);
            }
            break;
        }
    }
    return os.str();
}

RenderedPrompt assemble_prompt(const Instance& target, const Schema& schema,
                               const RepresentationConfig& rep, const OrganizationConfig& org,
                               std::span<const Instance> ranked_examples,
                               const SchemaIndex& schemas, const TokenCounter& counter,
                               int context_limit) {
    const int budget = context_limit - kResponseReserve;
    std::string question_text = render_question(rep, target.question, schema);

    int limit = std::min<int>(org.k, static_cast<int>(ranked_examples.size()));
    for (int m = limit; m >= 0; --m) {
        std::string text;
        if (m > 0) {
            // prompt order: ascending similarity, best example adjacent to target
            std::vector<Instance> prompt_order(ranked_examples.begin(),
                                               ranked_examples.begin() + m);
            std::reverse(prompt_order.begin(), prompt_order.end());
            text = render_examples(org, rep, prompt_order, schemas);
            text += "\n\n" + question_text;
        } else {
            text = question_text;
        }
        int tokens = counter.count(text);
        if (tokens <= budget) {
            RenderedPrompt out;
            out.text = std::move(text);
            out.token_count = tokens;
            out.examples_included = m;
            out.representation = rep;
            out.organization = org;
            out.ends_with_select = true;
            return out;
        }
    }
    throw PromptBudgetError("target representation alone exceeds token budget (limit " +
                            std::to_string(context_limit) + ")");
}

} // namespace dail::promptgen
