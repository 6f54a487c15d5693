#pragma once

// Prompt construction: template files with {placeholder} blocks, seeded
// demonstration shuffling, and greedy token-budget packing. Rendering is
// deterministic: identical (template, demos, query, seed, budget) inputs
// produce bit-identical text.
//
// A template file has three sections, each introduced by a header line:
//
//   [instruction]
//   ...instruction text...
//   [demo]
//   ...block rendered once per demonstration...
//   [query]
//   ...block rendered once for the test instance...
//
// Section content is taken verbatim between headers (the newline before the
// next header and a single trailing newline at end of file are stripped).
// Placeholders are {name} with identifier names. Demonstration blocks see
// the instance fields plus the reserved names {answer}, {explanation} and
// {answer_choices}.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ease/core.hpp"
#include "ease/util.hpp"

namespace ease {

enum class PromptMode { ICL, PE, EP, SCORE };

inline std::string to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::ICL: return "ICL";
        case PromptMode::PE: return "PE";
        case PromptMode::EP: return "EP";
        case PromptMode::SCORE: return "SCORE";
    }
    return "?";
}

inline PromptMode prompt_mode_from_string(std::string_view s) {
    std::string u = ascii_lower(s);
    if (u == "icl") return PromptMode::ICL;
    if (u == "pe") return PromptMode::PE;
    if (u == "ep") return PromptMode::EP;
    if (u == "score") return PromptMode::SCORE;
    throw ConfigError("unknown prompt mode '" + std::string(s) + "'");
}

struct PromptTemplate {
    std::string template_set_id = "default";
    PromptMode mode = PromptMode::ICL;
    std::string instruction_text;
    std::string demo_block;
    std::string query_block;
};

struct RenderedPrompt {
    std::string text;
    std::vector<std::string> demos_used;  // instance ids, in rendered order
    PromptMode mode = PromptMode::ICL;
    std::uint64_t shuffle_seed = 0;
};

// Positive/negative verbalizer pair for the explanation scorer.
struct ScoreVerbalizers {
    std::string pos = "Yes";
    std::string neg = "No";

    // Named presets: v1 = Yes/No, v2 = True/False, v3 = Foo/Jaa.
    static ScoreVerbalizers preset(std::string_view name) {
        std::string n = ascii_lower(name);
        if (n == "v1") return {"Yes", "No"};
        if (n == "v2") return {"True", "False"};
        if (n == "v3") return {"Foo", "Jaa"};
        throw ConfigError("unknown scorer verbalizer preset '" + std::string(name) + "'");
    }
};

namespace detail {

inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Replaces each {name} with fields.at(name); a placeholder with no binding
// throws MissingPlaceholder. Braces not forming {identifier} pass through.
inline std::string substitute(std::string_view block, const std::map<std::string, std::string>& fields) {
    std::string out;
    out.reserve(block.size());
    std::size_t i = 0;
    while (i < block.size()) {
        char c = block[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < block.size() && is_ident_char(block[j])) ++j;
        if (j == i + 1 || j >= block.size() || block[j] != '}') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::string name(block.substr(i + 1, j - i - 1));
        auto it = fields.find(name);
        if (it == fields.end())
            throw MissingPlaceholder("no value for placeholder '{" + name + "}'");
        out += it->second;
        i = j + 1;
    }
    return out;
}

// Blocks joined with a blank line: instruction, demos, query.
inline std::string assemble(std::string_view instruction, std::span<const std::string> demo_texts,
                            std::size_t demo_count, std::string_view query) {
    std::string out(instruction);
    for (std::size_t i = 0; i < demo_count; ++i) {
        out += "\n\n";
        out += demo_texts[i];
    }
    out += "\n\n";
    out += query;
    return out;
}

}  // namespace detail

// Core renderer shared by all prompt kinds. Demonstrations are permuted by a
// seeded Fisher-Yates shuffle, truncated to max_demos, then greedily packed:
// trailing demos are dropped (never the query) until the assembled text fits
// token_budget.
inline RenderedPrompt render_blocks(const PromptTemplate& tpl,
                                    std::vector<std::pair<std::string, std::map<std::string, std::string>>> demos,
                                    const std::map<std::string, std::string>& query_fields,
                                    std::uint64_t shuffle_seed, std::size_t max_demos,
                                    std::size_t token_budget, const TokenCounter& counter) {
    seeded_shuffle(demos, shuffle_seed);
    if (demos.size() > max_demos) demos.resize(max_demos);

    std::string instruction = detail::substitute(tpl.instruction_text, query_fields);
    std::string query = detail::substitute(tpl.query_block, query_fields);
    std::vector<std::string> demo_texts;
    demo_texts.reserve(demos.size());
    for (const auto& [id, fields] : demos) demo_texts.push_back(detail::substitute(tpl.demo_block, fields));

    std::size_t keep = demo_texts.size();
    std::string text = detail::assemble(instruction, demo_texts, keep, query);
    while (keep > 0 && counter(text) > token_budget) {
        --keep;
        text = detail::assemble(instruction, demo_texts, keep, query);
    }
    if (keep == 0 && counter(text) > token_budget)
        throw BudgetTooSmall("zero-demonstration prompt needs " + std::to_string(counter(text)) +
                             " tokens, budget is " + std::to_string(token_budget));

    RenderedPrompt out;
    out.text = std::move(text);
    out.mode = tpl.mode;
    out.shuffle_seed = shuffle_seed;
    for (std::size_t i = 0; i < keep; ++i) out.demos_used.push_back(demos[i].first);
    return out;
}

inline RenderedPrompt render(const PromptTemplate& tpl, std::span<const Demonstration> demos,
                             const InstanceInput& query, const TaskSpec& task, std::uint64_t shuffle_seed,
                             std::size_t token_budget, const TokenCounter& counter,
                             std::size_t max_demos = 48) {
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> blocks;
    blocks.reserve(demos.size());
    for (const auto& demo : demos) {
        auto fields = demo.input.fields;
        fields["answer"] = task.verbalizer(demo.label);
        fields["explanation"] = demo.explanation;
        fields["answer_choices"] = task.answer_choices_text;
        blocks.emplace_back(demo.input.id, std::move(fields));
    }
    auto query_fields = query.fields;
    query_fields["answer_choices"] = task.answer_choices_text;
    return render_blocks(tpl, std::move(blocks), query_fields, shuffle_seed, max_demos, token_budget, counter);
}

// Scoring prompt: each demonstration shows input + explanation + a pos/neg
// verbalizer answer; the query ends right before the answer token position.
// An empty demo set yields the zero-shot scoring prompt.
inline RenderedPrompt render_score_prompt(const PromptTemplate& tpl, const ScoringDemoSet& scoring_demos,
                                          const InstanceInput& query_input, const std::string& explanation,
                                          const TaskSpec& task, const ScoreVerbalizers& verbs,
                                          std::uint64_t shuffle_seed, std::size_t token_budget,
                                          const TokenCounter& counter, std::size_t max_demos = 48) {
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> blocks;
    blocks.reserve(scoring_demos.items.size());
    for (const auto& item : scoring_demos.items) {
        auto fields = item.input.fields;
        fields["explanation"] = item.explanation;
        fields["answer"] = item.polarity == Polarity::Positive ? verbs.pos : verbs.neg;
        fields["answer_choices"] = task.answer_choices_text;
        blocks.emplace_back(item.input.id, std::move(fields));
    }
    auto query_fields = query_input.fields;
    query_fields["explanation"] = explanation;
    query_fields["answer_choices"] = task.answer_choices_text;
    return render_blocks(tpl, std::move(blocks), query_fields, shuffle_seed, max_demos, token_budget, counter);
}

inline PromptTemplate parse_template_text(std::string_view content, PromptMode mode,
                                          const std::string& set_id, const std::string& origin) {
    auto find_header = [&](std::string_view header, std::size_t from) -> std::size_t {
        std::string needle = "[" + std::string(header) + "]\n";
        if (content.substr(from).rfind(needle, 0) == 0) return from;  // header at `from`
        std::string anchored = "\n" + needle;
        auto pos = content.find(anchored, from);
        return pos == std::string_view::npos ? std::string_view::npos : pos + 1;
    };
    std::size_t h_instr = find_header("instruction", 0);
    std::size_t h_demo = find_header("demo", 0);
    std::size_t h_query = find_header("query", 0);
    if (h_instr != 0 || h_demo == std::string_view::npos || h_query == std::string_view::npos ||
        !(h_instr < h_demo && h_demo < h_query))
        throw SchemaError("template '" + origin + "': expected [instruction], [demo], [query] sections in order");

    auto section = [&](std::size_t header_pos, std::string_view header, std::size_t end_pos) {
        std::size_t start = header_pos + header.size() + 3;  // "[...]\n"
        std::string_view body = content.substr(start, end_pos - start);
        if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
        return std::string(body);
    };
    PromptTemplate tpl;
    tpl.mode = mode;
    tpl.template_set_id = set_id;
    tpl.instruction_text = section(h_instr, "instruction", h_demo);
    tpl.demo_block = section(h_demo, "demo", h_query);
    tpl.query_block = section(h_query, "query", content.size());
    return tpl;
}

inline PromptTemplate parse_template_file(const std::filesystem::path& path, PromptMode mode,
                                          const std::string& set_id) {
    return parse_template_text(read_file(path), mode, set_id, path.string());
}

// Loads templates/manifest.json and all files it names. Variant sets overlay
// the default set, so a variant only has to swap the modes it changes.
class TemplateLibrary {
public:
    explicit TemplateLibrary(const std::filesystem::path& dir) : dir_(dir) {
        auto manifest_path = dir / "manifest.json";
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(read_file(manifest_path));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("bad template manifest " + manifest_path.string() + ": " + e.what());
        }
        if (!manifest.contains("tasks"))
            throw SchemaError("template manifest missing 'tasks': " + manifest_path.string());
        for (auto& [task_id, entry] : manifest.at("tasks").items()) {
            load_set(task_id, "default", entry.at("modes"));
            if (entry.contains("variants"))
                for (auto& [set_id, modes] : entry.at("variants").items()) load_set(task_id, set_id, modes);
        }
    }

    bool has(const std::string& task_id, const std::string& set_id, PromptMode mode) const {
        return lookup(task_id, set_id, mode) != nullptr;
    }

    const PromptTemplate& get(const std::string& task_id, const std::string& set_id, PromptMode mode) const {
        const PromptTemplate* tpl = lookup(task_id, set_id, mode);
        if (!tpl)
            throw ConfigError("no template for task '" + task_id + "', set '" + set_id + "', mode " +
                              to_string(mode));
        return *tpl;
    }

private:
    void load_set(const std::string& task_id, const std::string& set_id, const nlohmann::json& modes) {
        for (auto& [mode_name, file] : modes.items()) {
            PromptMode mode = prompt_mode_from_string(mode_name);
            auto path = dir_ / file.get<std::string>();
            templates_[key(task_id, set_id, mode)] = parse_template_file(path, mode, set_id);
        }
    }

    static std::string key(const std::string& task_id, const std::string& set_id, PromptMode mode) {
        return task_id + "\x1f" + set_id + "\x1f" + to_string(mode);
    }

    const PromptTemplate* lookup(const std::string& task_id, const std::string& set_id, PromptMode mode) const {
        auto it = templates_.find(key(task_id, set_id, mode));
        if (it == templates_.end() && set_id != "default")
            it = templates_.find(key(task_id, "default", mode));  // variant falls back per mode
        return it == templates_.end() ? nullptr : &it->second;
    }

    std::filesystem::path dir_;
    std::map<std::string, PromptTemplate> templates_;
};

struct PromptLimits {
    std::size_t max_demos = 48;
    std::size_t token_budget = 6000;
    TokenCounter counter = approx_token_count;
};

// Binds a task to its template set and packing limits. All members are const
// after construction; safe for concurrent use.
class Prompter {
public:
    Prompter(const TemplateLibrary& lib, TaskSpec task, PromptLimits limits)
        : lib_(lib), task_(std::move(task)), limits_(std::move(limits)) {}

    const TaskSpec& task() const { return task_; }
    const PromptLimits& limits() const { return limits_; }

    RenderedPrompt task_prompt(PromptMode mode, std::span<const Demonstration> demos,
                               const InstanceInput& query, std::uint64_t seed) const {
        return render(tpl(mode), demos, query, task_, seed, limits_.token_budget, limits_.counter,
                      limits_.max_demos);
    }

    // Class-probability query for a fixed explanation: the EP prompt with the
    // explanation filled in and the answer slot left open.
    RenderedPrompt soft_eval_prompt(std::span<const Demonstration> demos, const InstanceInput& query,
                                    const std::string& explanation, std::uint64_t seed) const {
        PromptTemplate t = tpl(PromptMode::EP);
        t.query_block += " {explanation}\nAnswer:";
        auto q = query;
        q.fields["explanation"] = explanation;
        return render(t, demos, q, task_, seed, limits_.token_budget, limits_.counter, limits_.max_demos);
    }

    // Label-conditioned explanation request: the PE prompt with the answer
    // filled in and the explanation slot left open.
    RenderedPrompt conditioned_explanation_prompt(std::span<const Demonstration> demos,
                                                  const InstanceInput& query, const std::string& label,
                                                  std::uint64_t seed) const {
        PromptTemplate t = tpl(PromptMode::PE);
        t.query_block += " " + task_.verbalizer(label) + "\nExplanation:";
        return render(t, demos, query, task_, seed, limits_.token_budget, limits_.counter, limits_.max_demos);
    }

    RenderedPrompt score_prompt(const ScoringDemoSet& demos, const InstanceInput& query,
                                const std::string& explanation, std::uint64_t seed,
                                const ScoreVerbalizers& verbs = {}) const {
        return render_score_prompt(tpl(PromptMode::SCORE), demos, query, explanation, task_, verbs, seed,
                                   limits_.token_budget, limits_.counter, limits_.max_demos);
    }

private:
    const PromptTemplate& tpl(PromptMode mode) const {
        return lib_.get(task_.task_id, task_.template_set_id, mode);
    }

    const TemplateLibrary& lib_;
    TaskSpec task_;
    PromptLimits limits_;
};

}  // namespace ease
