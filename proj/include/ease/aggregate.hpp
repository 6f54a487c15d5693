#pragma once

// Prediction-combination strategies over sampled candidates: hard majority
// voting, soft probability aggregation, explanation-weighted variants, the
// argmax-token variant, the label-conditioned generation baseline, and the
// inconsistency diagnostic. Ties always break toward the first label in task
// order. Per-label contributions are sorted before summation, so results are
// exactly permutation-invariant.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "ease/backend.hpp"
#include "ease/core.hpp"
#include "ease/prompting.hpp"
#include "ease/sampler.hpp"

namespace ease {

enum class Strategy {
    MajorityVote,
    SoftAggregate,
    WeightedSoftAggregate,
    WeightedHardVote,
    HardArgmaxVote,
    Flame,
};

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::MajorityVote: return "majority_vote";
        case Strategy::SoftAggregate: return "soft_aggregate";
        case Strategy::WeightedSoftAggregate: return "weighted_soft_aggregate";
        case Strategy::WeightedHardVote: return "weighted_hard_vote";
        case Strategy::HardArgmaxVote: return "hard_argmax_vote";
        case Strategy::Flame: return "flame";
    }
    return "?";
}

struct AggregationResult {
    std::string prediction;
    std::vector<std::string> labels;  // task order
    std::vector<double> per_label_mass;
    Strategy strategy = Strategy::MajorityVote;
    bool tie_broken = false;
    // Set when every weight was zero and the result fell back to unweighted
    // soft aggregation.
    bool zero_weight_fallback = false;

    double mass_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return per_label_mass[i];
        throw MissingLabel("no mass for label '" + std::string(label) + "'");
    }
};

namespace detail {

// Order-independent sum: contributions are sorted ascending first, so any
// permutation of the candidates produces bit-identical masses.
inline double stable_sum(std::vector<double>& contributions) {
    std::sort(contributions.begin(), contributions.end());
    double sum = 0.0;
    for (double v : contributions) sum += v;
    return sum;
}

inline AggregationResult finish(const TaskSpec& task, std::vector<std::vector<double>>& contributions,
                                Strategy strategy) {
    AggregationResult r;
    r.strategy = strategy;
    r.labels = task.labels;
    r.per_label_mass.reserve(task.labels.size());
    for (auto& c : contributions) r.per_label_mass.push_back(stable_sum(c));
    auto best = argmax_with_ties(r.per_label_mass);
    r.prediction = task.labels[best.index];
    r.tie_broken = best.tie_broken;
    return r;
}

}  // namespace detail

// Hard majority vote over the sampled prediction tokens. Unparseable
// candidates abstain. Requires at least one parsed candidate.
inline AggregationResult majority_vote(const TaskSpec& task, std::span<const Candidate> candidates) {
    std::vector<std::vector<double>> contributions(task.labels.size());
    bool any = false;
    for (const auto& c : candidates) {
        if (!c.parse_ok) continue;
        int idx = task.index_of(c.prediction);
        if (idx < 0) throw UnknownLabel("majority_vote: prediction '" + c.prediction + "' is not a task label");
        contributions[static_cast<std::size_t>(idx)].push_back(1.0);
        any = true;
    }
    if (!any) throw AllParsesFailed("majority_vote: no parsed candidates to vote");
    return detail::finish(task, contributions, Strategy::MajorityVote);
}

// Soft probability aggregation: per-label mass is the sum of every
// candidate's class probability, including the uniform mass of unparseable
// candidates.
inline AggregationResult soft_aggregate(const TaskSpec& task, std::span<const Candidate> candidates) {
    if (candidates.empty()) throw AllParsesFailed("soft_aggregate: no candidates");
    std::vector<std::vector<double>> contributions(task.labels.size());
    for (const auto& c : candidates) {
        if (c.distribution.empty()) throw Error("soft_aggregate: candidate lacks a distribution");
        for (std::size_t i = 0; i < task.labels.size(); ++i)
            contributions[i].push_back(c.distribution.probs()[i]);
    }
    return detail::finish(task, contributions, Strategy::SoftAggregate);
}

// The full combined prediction: per-label mass is the explanation-quality
// weighted sum of class probabilities. Weights are used as-is (argmax is
// scale-invariant); if every weight is exactly zero the result falls back to
// unweighted soft aggregation with zero_weight_fallback set.
inline AggregationResult weighted_soft_aggregate(const TaskSpec& task,
                                                 std::span<const ScoredCandidate> scored) {
    if (scored.empty()) throw AllParsesFailed("weighted_soft_aggregate: no candidates");
    bool all_zero = true;
    for (const auto& s : scored)
        if (s.weight != 0.0) all_zero = false;
    if (all_zero) {
        std::vector<Candidate> plain;
        plain.reserve(scored.size());
        for (const auto& s : scored) plain.push_back(s.candidate);
        AggregationResult r = soft_aggregate(task, plain);
        r.strategy = Strategy::WeightedSoftAggregate;
        r.zero_weight_fallback = true;
        return r;
    }
    std::vector<std::vector<double>> contributions(task.labels.size());
    for (const auto& s : scored) {
        if (s.candidate.distribution.empty())
            throw Error("weighted_soft_aggregate: candidate lacks a distribution");
        for (std::size_t i = 0; i < task.labels.size(); ++i)
            contributions[i].push_back(s.weight * s.candidate.distribution.probs()[i]);
    }
    return detail::finish(task, contributions, Strategy::WeightedSoftAggregate);
}

// Weighted majority vote over prediction tokens (the soft-probability
// ablation). Unparseable candidates abstain.
inline AggregationResult weighted_hard_vote(const TaskSpec& task, std::span<const ScoredCandidate> scored) {
    std::vector<std::vector<double>> contributions(task.labels.size());
    bool any = false;
    for (const auto& s : scored) {
        if (!s.candidate.parse_ok) continue;
        int idx = task.index_of(s.candidate.prediction);
        if (idx < 0)
            throw UnknownLabel("weighted_hard_vote: prediction '" + s.candidate.prediction +
                               "' is not a task label");
        contributions[static_cast<std::size_t>(idx)].push_back(s.weight);
        any = true;
    }
    if (!any) throw AllParsesFailed("weighted_hard_vote: no parsed candidates to vote");
    return detail::finish(task, contributions, Strategy::WeightedHardVote);
}

// Majority vote over each distribution's argmax instead of the sampled
// token. Unparseable candidates abstain (their distribution is synthetic).
inline AggregationResult hard_argmax_vote(const TaskSpec& task, std::span<const Candidate> candidates) {
    std::vector<std::vector<double>> contributions(task.labels.size());
    bool any = false;
    for (const auto& c : candidates) {
        if (!c.parse_ok) continue;
        if (c.distribution.empty()) throw Error("hard_argmax_vote: candidate lacks a distribution");
        auto best = argmax_with_ties(c.distribution.probs());
        contributions[best.index].push_back(1.0);
        any = true;
    }
    if (!any) throw AllParsesFailed("hard_argmax_vote: no parsed candidates to vote");
    return detail::finish(task, contributions, Strategy::HardArgmaxVote);
}

// Fraction of parsed candidates whose sampled prediction token differs from
// the argmax of their soft distribution.
inline double inconsistency_ratio(std::span<const Candidate> candidates) {
    std::size_t parsed = 0, mismatched = 0;
    for (const auto& c : candidates) {
        if (!c.parse_ok || c.distribution.empty()) continue;
        ++parsed;
        if (argmax_label(c.distribution) != c.prediction) ++mismatched;
    }
    return parsed == 0 ? 0.0 : static_cast<double>(mismatched) / static_cast<double>(parsed);
}

// Label-conditioned generation baseline: for each label, generate one
// explanation conditioned on that label, then read the label's answer logit
// given its own explanation; predict the label with the highest logit.
// Issues exactly |labels| generation + |labels| logprob requests.
inline AggregationResult flame_baseline(const Prompter& prompter, const InstanceInput& instance,
                                        std::span<const Demonstration> demos, Backend& backend,
                                        std::uint64_t shuffle_seed) {
    const TaskSpec& task = prompter.task();
    SamplingParams params;
    params.temperature = 0.0;
    params.max_tokens = 256;
    params.stop_sequences = {"\n\n"};

    std::map<std::string, double> logits;
    for (const auto& label : task.labels) {
        RenderedPrompt gen = prompter.conditioned_explanation_prompt(demos, instance, label, shuffle_seed);
        Completion c = backend.complete(gen.text, params, 0);
        std::string explanation(trim(c.text));
        if (auto cut = explanation.find("\nAnswer:"); cut != std::string::npos)
            explanation = std::string(trim(explanation.substr(0, cut)));
        RenderedPrompt eval = prompter.soft_eval_prompt(demos, instance, explanation, shuffle_seed);
        auto lp = label_logprobs_or_frequency(backend, eval.text, task.verbalizers);
        logits[label] = lp.at(label);
    }

    LabelDistribution masses = normalize_over_verbalizers(task, logits);
    AggregationResult r;
    r.strategy = Strategy::Flame;
    r.labels = task.labels;
    r.per_label_mass = masses.probs();
    auto best = argmax_with_ties(r.per_label_mass);
    r.prediction = task.labels[best.index];
    r.tie_broken = best.tie_broken;
    return r;
}

enum class Judgement { Win, Tie, Lose };

inline std::string to_string(Judgement j) {
    switch (j) {
        case Judgement::Win: return "win";
        case Judgement::Tie: return "tie";
        case Judgement::Lose: return "lose";
    }
    return "?";
}

// Win/tie/lose agreement between rater counts (c1, c2) and model scores
// (s1, s2): win when the score ordering matches the rater ordering, lose
// when it opposes it, tie when the raters are split. Equal scores with
// unequal counts also count as a tie (no model preference).
inline Judgement human_judge(int c1, int c2, double s1, double s2) {
    if (c1 < 0 || c2 < 0) throw ConfigError("human_judge: rater counts must be non-negative");
    if (c1 == c2) return Judgement::Tie;
    if ((c1 > c2 && s1 > s2) || (c1 < c2 && s1 < s2)) return Judgement::Win;
    if ((c1 > c2 && s1 < s2) || (c1 < c2 && s1 > s2)) return Judgement::Lose;
    return Judgement::Tie;
}

}  // namespace ease
