#pragma once

// Bootstrapped explanation scorer. Negative explanations are mined by
// sampling candidates for each training demonstration and keeping those
// whose prediction disagrees with the gold label; the balanced pos/neg set
// then serves as demonstrations for the scoring prompt. Also hosts the
// lexical-overlap scorer used as a baseline weighting scheme.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ease/backend.hpp"
#include "ease/core.hpp"
#include "ease/prompting.hpp"
#include "ease/sampler.hpp"

namespace ease {

struct BootstrapConfig {
    int k_exemplars = 8;
    int n_mine = 9;
    double temperature = 0.7;
    std::uint64_t seed = 0;
    PromptMode mode = PromptMode::EP;  // PE selectable (--bootstrap-mode pe)
    int max_tokens = 256;
    int workers = 1;
};

// instance id -> mined negative explanations (possibly empty).
using NegativesMap = std::map<std::string, std::vector<std::string>>;

// For every training instance, sample n_mine candidates using k seeded
// exemplars (drawn from the rest of the training set) and keep the
// explanations whose prediction differs from the gold label. A mined
// explanation equal to the instance's gold explanation is never kept.
inline NegativesMap mine_negatives(std::span<const Demonstration> train, const BootstrapConfig& cfg,
                                   Backend& backend, const Prompter& prompter) {
    if (static_cast<int>(train.size()) < cfg.k_exemplars + 1)
        throw ConfigError("mine_negatives: need at least k_exemplars + 1 training instances");

    std::vector<std::vector<std::string>> negatives(train.size());
    parallel_for_indexed(train.size(), cfg.workers, [&](std::size_t i) {
        const Demonstration& target = train[i];

        std::vector<std::size_t> pool;
        pool.reserve(train.size() - 1);
        for (std::size_t j = 0; j < train.size(); ++j)
            if (j != i) pool.push_back(j);
        seeded_shuffle(pool, derive_seed(cfg.seed, "mine-exemplars", target.input.id));
        pool.resize(static_cast<std::size_t>(cfg.k_exemplars));
        std::vector<Demonstration> exemplars;
        exemplars.reserve(pool.size());
        for (std::size_t j : pool) exemplars.push_back(train[j]);

        SamplerConfig sc;
        sc.n_candidates = cfg.n_mine;
        sc.temperature = cfg.temperature;
        sc.mode = cfg.mode;
        sc.max_tokens = cfg.max_tokens;
        sc.collect_distributions = false;

        std::vector<Candidate> mined;
        try {
            mined = sample_candidates(prompter, exemplars, target.input, sc, backend,
                                      derive_seed(cfg.seed, "mine-shuffle", target.input.id));
        } catch (const AllParsesFailed&) {
            return;  // nothing usable from this instance
        }
        for (const auto& c : mined) {
            if (!c.parse_ok || c.prediction == target.label) continue;
            if (c.explanation.empty() || c.explanation == target.explanation) continue;
            negatives[i].push_back(c.explanation);
        }
    });

    NegativesMap out;
    for (std::size_t i = 0; i < train.size(); ++i) out[train[i].input.id] = std::move(negatives[i]);
    return out;
}

// Builds the balanced scoring demonstration set: instances with at least one
// mined negative contribute exactly one positive (their gold explanation)
// and one seeded-random negative, interleaved pos/neg in seeded instance
// order. Throws EmptyDemoSet when no instance has negatives; callers then
// degrade to zero-shot scoring.
inline ScoringDemoSet build_scoring_demos(std::span<const Demonstration> train, const NegativesMap& negatives,
                                          std::uint64_t seed) {
    std::vector<std::size_t> qualifying;
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto it = negatives.find(train[i].input.id);
        if (it != negatives.end() && !it->second.empty()) qualifying.push_back(i);
    }
    if (qualifying.empty())
        throw EmptyDemoSet("no training instance produced a negative explanation");

    seeded_shuffle(qualifying, derive_seed(seed, "demo-order"));
    ScoringDemoSet set;
    set.build_seed = seed;
    set.items.reserve(qualifying.size() * 2);
    for (std::size_t i : qualifying) {
        const Demonstration& demo = train[i];
        const auto& negs = negatives.at(demo.input.id);
        SplitMix64 rng{derive_seed(seed, "pick-negative", demo.input.id)};
        const std::string& chosen = negs[rng.next() % negs.size()];
        set.items.push_back({demo.input, demo.explanation, Polarity::Positive});
        set.items.push_back({demo.input, chosen, Polarity::Negative});
    }
    return set;
}

// Explanation quality weight: normalized probability of the positive
// verbalizer at the answer slot of the scoring prompt. Empty explanations
// score 0 by convention.
inline double score_explanation(const Prompter& prompter, const InstanceInput& instance,
                                const std::string& explanation, const ScoringDemoSet& demo_set,
                                Backend& backend, std::uint64_t shuffle_seed,
                                const ScoreVerbalizers& verbs = {}) {
    if (trim(explanation).empty()) return 0.0;
    RenderedPrompt prompt = prompter.score_prompt(demo_set, instance, explanation, shuffle_seed, verbs);
    auto lp = label_logprobs_or_frequency(backend, prompt.text, {{"pos", verbs.pos}, {"neg", verbs.neg}});
    return normalize_over_verbalizers({"pos", "neg"}, lp).prob("pos");
}

namespace detail {

inline const std::set<std::string>& stopwords() {
    // Fixed 50-word list; changing it changes lexical scores.
    static const std::set<std::string> words = {
        "a",    "an",   "the",  "and",  "or",   "but",  "if",   "then", "than", "that",
        "this", "these", "those", "is",  "are",  "was",  "were", "be",   "been", "being",
        "am",   "do",   "does", "did",  "have", "has",  "had",  "not",  "no",   "of",
        "in",   "on",   "at",   "by",   "for",  "with", "to",   "from", "as",   "it",
        "its",  "he",   "she",  "they", "we",   "you",  "i",    "there", "here", "so"};
    return words;
}

inline std::set<std::string> content_tokens(std::string_view text) {
    std::set<std::string> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty() && !stopwords().count(token)) out.insert(token);
        token.clear();
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) token.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    return out;
}

}  // namespace detail

// Lexical-overlap weight: |content tokens of explanation that also appear in
// the input| / |content tokens of explanation|.
inline double lexical_score(const InstanceInput& instance, const std::string& explanation) {
    auto expl = detail::content_tokens(explanation);
    if (expl.empty()) return 0.0;
    std::string joined;
    for (const auto& [name, value] : instance.fields) {
        joined += value;
        joined += ' ';
    }
    auto input = detail::content_tokens(joined);
    std::size_t shared = 0;
    for (const auto& t : expl)
        if (input.count(t)) ++shared;
    return static_cast<double>(shared) / static_cast<double>(expl.size());
}

struct BootstrapData {
    NegativesMap negatives;
    ScoringDemoSet demos;
};

// JSONL persistence so bootstrap products are reusable across runs:
// one meta line, one line per instance's negatives, one line per demo item.
inline void save_bootstrap(const std::filesystem::path& path, const BootstrapData& data) {
    std::ostringstream out;
    nlohmann::json meta = {{"type", "meta"}, {"build_seed", data.demos.build_seed}};
    out << meta.dump() << "\n";
    for (const auto& [id, negs] : data.negatives) {
        nlohmann::json line = {{"type", "negatives"}, {"instance", id}, {"negatives", negs}};
        out << line.dump() << "\n";
    }
    for (const auto& item : data.demos.items) {
        nlohmann::json line = {{"type", "demo"},
                               {"instance", item.input.id},
                               {"fields", item.input.fields},
                               {"explanation", item.explanation},
                               {"polarity", item.polarity == Polarity::Positive ? "pos" : "neg"}};
        out << line.dump() << "\n";
    }
    write_file_atomic(path, out.str());
}

inline std::optional<BootstrapData> load_bootstrap(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    BootstrapData data;
    std::istringstream in(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "meta") {
            data.demos.build_seed = j.value("build_seed", std::uint64_t{0});
        } else if (type == "negatives") {
            data.negatives[j.at("instance").get<std::string>()] =
                j.at("negatives").get<std::vector<std::string>>();
        } else if (type == "demo") {
            ScoringDemo item;
            item.input.id = j.at("instance").get<std::string>();
            item.input.fields = j.value("fields", std::map<std::string, std::string>{});
            item.explanation = j.at("explanation").get<std::string>();
            item.polarity = j.at("polarity").get<std::string>() == "pos" ? Polarity::Positive : Polarity::Negative;
            data.demos.items.push_back(std::move(item));
        } else {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": unknown record type '" + type + "'");
        }
    }
    return data;
}

}  // namespace ease
