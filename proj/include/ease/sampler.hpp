#pragma once

// Candidate generation: draw N explanation+prediction pairs per instance,
// parse them, and attach each candidate's soft label distribution via a
// second-pass class-probability query conditioned on the same prompt and
// explanation.

#include <span>
#include <string>
#include <vector>

#include "ease/backend.hpp"
#include "ease/core.hpp"
#include "ease/prompting.hpp"

namespace ease {

struct SamplerConfig {
    int n_candidates = 9;
    double temperature = 0.7;
    PromptMode mode = PromptMode::EP;
    int max_tokens = 256;
    // When false, parsed candidates carry one-hot distributions instead of
    // issuing the N class-probability queries (hard-vote-only methods).
    bool collect_distributions = true;
    int draw_workers = 1;  // parallelism for the N completion draws
};

struct ParsedCandidate {
    std::string explanation;
    std::string prediction;  // label id, empty if !parse_ok
    bool parse_ok = false;
};

namespace detail {

// Maps an answer token to a label by comparing the first alphanumeric token
// (case-insensitive) against each verbalizer's first token. An ambiguous or
// unmatched token yields no label.
inline std::string match_answer_token(std::string_view text, const TaskSpec& task) {
    std::string token = first_alnum_token(text);
    if (token.empty()) return {};
    std::string found;
    for (const auto& label : task.labels) {
        if (first_alnum_token(task.verbalizer(label)) == token) {
            if (!found.empty()) return {};  // two labels share a first token
            found = label;
        }
    }
    return found;
}

}  // namespace detail

// EP: the explanation is the text after the last "Explanation:" up to the
// final "Answer:"; the token after that "Answer:" is the prediction.
// PE: the answer follows the first "Answer:" (or starts the text, since the
// prompt ends with the cue); the explanation follows "Explanation:".
inline ParsedCandidate parse_candidate(const std::string& raw, PromptMode mode, const TaskSpec& task) {
    static constexpr std::string_view kAnswer = "Answer:";
    static constexpr std::string_view kExplanation = "Explanation:";
    ParsedCandidate out;

    if (mode == PromptMode::EP) {
        auto ans = raw.rfind(kAnswer);
        if (ans == std::string::npos) return out;
        out.prediction = detail::match_answer_token(std::string_view(raw).substr(ans + kAnswer.size()), task);
        if (out.prediction.empty()) return out;
        std::string_view before = std::string_view(raw).substr(0, ans);
        auto exp = before.rfind(kExplanation);
        std::string_view explanation = exp == std::string_view::npos ? before : before.substr(exp + kExplanation.size());
        out.explanation = std::string(trim(explanation));
        out.parse_ok = true;
        return out;
    }
    if (mode == PromptMode::PE) {
        auto ans = raw.find(kAnswer);
        std::string_view answer_part =
            ans == std::string::npos ? std::string_view(raw) : std::string_view(raw).substr(ans + kAnswer.size());
        out.prediction = detail::match_answer_token(answer_part, task);
        if (out.prediction.empty()) return out;
        auto exp = raw.find(kExplanation);
        if (exp != std::string::npos)
            out.explanation = std::string(trim(std::string_view(raw).substr(exp + kExplanation.size())));
        out.parse_ok = true;
        return out;
    }
    throw ConfigError("parse_candidate: mode must be PE or EP");
}

// p(y | prompt, x, e): renders the answer-slot-open prompt for a fixed
// explanation and normalizes the verbalizer logprobs. Falls back to
// frequency estimation when the backend cannot report logprobs.
inline LabelDistribution soft_distribution(const Prompter& prompter, std::span<const Demonstration> demos,
                                           const InstanceInput& instance, const std::string& explanation,
                                           Backend& backend, std::uint64_t shuffle_seed) {
    RenderedPrompt p = prompter.soft_eval_prompt(demos, instance, explanation, shuffle_seed);
    auto lp = label_logprobs_or_frequency(backend, p.text, prompter.task().verbalizers);
    return normalize_over_verbalizers(prompter.task(), lp);
}

// Draws exactly N candidates in draw order. Unparseable candidates are kept
// (uniform distribution, parse_ok = false) so N stays fixed; they are only
// dropped later if a caller opts in. Throws AllParsesFailed when no draw
// parses.
inline std::vector<Candidate> sample_candidates(const Prompter& prompter, std::span<const Demonstration> demos,
                                                const InstanceInput& instance, const SamplerConfig& cfg,
                                                Backend& backend, std::uint64_t shuffle_seed) {
    if (cfg.n_candidates < 1) throw ConfigError("sampler: n_candidates must be >= 1");
    if (cfg.mode != PromptMode::PE && cfg.mode != PromptMode::EP)
        throw ConfigError("sampler: mode must be PE or EP");

    RenderedPrompt prompt = prompter.task_prompt(cfg.mode, demos, instance, shuffle_seed);
    SamplingParams params;
    params.temperature = cfg.temperature;
    params.max_tokens = cfg.max_tokens;
    params.stop_sequences = {"\n\n"};

    std::size_t n = static_cast<std::size_t>(cfg.n_candidates);
    std::vector<Completion> draws(n);
    parallel_for_indexed(n, cfg.draw_workers, [&](std::size_t j) {
        draws[j] = backend.complete(prompt.text, params, static_cast<int>(j));
    });

    std::vector<Candidate> out(n);
    bool any_ok = false;
    for (std::size_t j = 0; j < n; ++j) {
        ParsedCandidate parsed = parse_candidate(draws[j].text, cfg.mode, prompter.task());
        out[j].raw_text = draws[j].text;
        out[j].explanation = parsed.explanation;
        out[j].prediction = parsed.prediction;
        out[j].parse_ok = parsed.parse_ok;
        any_ok = any_ok || parsed.parse_ok;
    }
    if (!any_ok) throw AllParsesFailed("all " + std::to_string(n) + " sampled candidates are malformed");

    // Distribution queries run sequentially in draw order; per-explanation
    // scripts and caches then see a stable arrival order.
    for (std::size_t j = 0; j < n; ++j) {
        if (!out[j].parse_ok) {
            out[j].distribution = LabelDistribution::uniform(prompter.task());
        } else if (cfg.collect_distributions) {
            out[j].distribution =
                soft_distribution(prompter, demos, instance, out[j].explanation, backend, shuffle_seed);
        } else {
            out[j].distribution = LabelDistribution::one_hot(prompter.task(), out[j].prediction);
        }
    }
    return out;
}

}  // namespace ease
