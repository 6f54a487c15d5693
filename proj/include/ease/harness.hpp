#pragma once

// Experiment orchestration: dataset ingestion, split construction, method
// dispatch across the full strategy matrix, metrics, and report emission.
// All randomness flows from the run seed through named sub-seeds, so worker
// counts never change results. report.json is byte-stable across reruns and
// cache replays; volatile runtime stats go to stats.json.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ease/aggregate.hpp"
#include "ease/backend.hpp"
#include "ease/core.hpp"
#include "ease/prompting.hpp"
#include "ease/sampler.hpp"
#include "ease/scorer.hpp"

namespace ease {

enum class Method {
    ICL,
    PE,
    EP,
    SelfConsistency,
    EASE,
    EASE_no_BLS,
    EASE_no_SPA,
    HardArgmax,
    Flame,
};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::ICL: return "icl";
        case Method::PE: return "pe";
        case Method::EP: return "ep";
        case Method::SelfConsistency: return "self-consistency";
        case Method::EASE: return "ease";
        case Method::EASE_no_BLS: return "ease-no-bls";
        case Method::EASE_no_SPA: return "ease-no-spa";
        case Method::HardArgmax: return "hard-argmax";
        case Method::Flame: return "flame";
    }
    return "?";
}

inline Method method_from_string(std::string_view s) {
    std::string n = ascii_lower(s);
    for (char& c : n)
        if (c == '_') c = '-';
    if (n == "icl") return Method::ICL;
    if (n == "pe") return Method::PE;
    if (n == "ep") return Method::EP;
    if (n == "self-consistency" || n == "sc") return Method::SelfConsistency;
    if (n == "ease") return Method::EASE;
    if (n == "ease-no-bls") return Method::EASE_no_BLS;
    if (n == "ease-no-spa") return Method::EASE_no_SPA;
    if (n == "hard-argmax") return Method::HardArgmax;
    if (n == "flame") return Method::Flame;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

struct DatasetRecord {
    std::string id;
    std::map<std::string, std::string> fields;
    std::string label;
    std::string explanation;  // may be empty for test records

    InstanceInput input() const { return {id, fields}; }
};

struct LoadResult {
    std::vector<DatasetRecord> records;
    int dropped = 0;  // removed by the explanation phrase filter
};

// Built-in task definitions. The two multi-choice tasks use positional
// letter labels; converters format the choices field accordingly.
inline TaskSpec builtin_task(const std::string& task_id) {
    auto nli = [&](const std::string& id) {
        TaskSpec t;
        t.task_id = id;
        t.labels = {"entail", "neutral", "contradict"};
        t.verbalizers = {{"entail", "Yes"}, {"neutral", "Maybe"}, {"contradict", "No"}};
        t.answer_choices_text = "Yes, Maybe, and No";
        t.required_fields = {"premise", "hypothesis"};
        return t;
    };
    auto multi_choice = [&](const std::string& id, int n_options) {
        TaskSpec t;
        t.task_id = id;
        std::string choices_text;
        for (int i = 0; i < n_options; ++i) {
            std::string letter(1, static_cast<char>('A' + i));
            t.labels.push_back(ascii_lower(letter));
            t.verbalizers[ascii_lower(letter)] = letter;
            if (i > 0) choices_text += i + 1 == n_options ? ", and " : ", ";
            choices_text += letter;
        }
        t.answer_choices_text = choices_text;
        t.required_fields = {"question", "choices"};
        return t;
    };
    if (task_id == "esnli") return nli("esnli");
    if (task_id == "anli_r1" || task_id == "anli_r2" || task_id == "anli_r3") return nli(task_id);
    if (task_id == "ecqa") return multi_choice("ecqa", 5);
    if (task_id == "openbookqa") return multi_choice("openbookqa", 4);
    if (task_id == "strategyqa") {
        TaskSpec t;
        t.task_id = "strategyqa";
        t.labels = {"true", "false"};
        t.verbalizers = {{"true", "True"}, {"false", "False"}};
        t.answer_choices_text = "True or False";
        t.required_fields = {"question"};
        return t;
    }
    if (task_id == "demo") {
        TaskSpec t;
        t.task_id = "demo";
        t.labels = {"yes", "no"};
        t.verbalizers = {{"yes", "Yes"}, {"no", "No"}};
        t.answer_choices_text = "Yes or No";
        t.required_fields = {"question"};
        return t;
    }
    throw ConfigError("unknown task '" + task_id + "'");
}

// Loads a JSONL dataset: one object per line with "id", "label", optional
// "explanation", and one string field per template placeholder. For the ANLI
// tasks, records whose explanation mentions the annotation-tool phrases are
// dropped and counted.
inline LoadResult load_dataset(const std::filesystem::path& path, const TaskSpec& task) {
    static const std::vector<std::string> kFilterPhrases = {"the system", "the computer", "the model",
                                                            "the ai"};
    bool apply_filter = task.task_id.rfind("anli", 0) == 0;

    std::istringstream in(read_file(path));
    LoadResult out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto where = [&] { return path.filename().string() + ":" + std::to_string(line_no); };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(where() + ": invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw SchemaError(where() + ": record is not an object");

        DatasetRecord rec;
        if (!j.contains("id") || !j["id"].is_string()) throw SchemaError(where() + ": missing field 'id'");
        rec.id = j["id"].get<std::string>();
        if (!j.contains("label") || !j["label"].is_string())
            throw SchemaError(where() + ": missing field 'label'");
        rec.label = j["label"].get<std::string>();
        if (task.index_of(rec.label) < 0)
            throw UnknownLabel(where() + ": label '" + rec.label + "' is not a '" + task.task_id + "' label");
        if (j.contains("explanation")) {
            if (!j["explanation"].is_string()) throw SchemaError(where() + ": 'explanation' must be a string");
            rec.explanation = j["explanation"].get<std::string>();
        }
        for (auto& [key, value] : j.items()) {
            if (key == "id" || key == "label" || key == "explanation") continue;
            if (!value.is_string()) throw SchemaError(where() + ": field '" + key + "' must be a string");
            rec.fields[key] = value.get<std::string>();
        }
        for (const auto& field : task.required_fields)
            if (!rec.fields.count(field)) throw SchemaError(where() + ": missing field '" + field + "'");

        if (apply_filter && !rec.explanation.empty()) {
            std::string lowered = ascii_lower(rec.explanation);
            bool drop = false;
            for (const auto& phrase : kFilterPhrases)
                if (lowered.find(phrase) != std::string::npos) drop = true;
            if (drop) {
                ++out.dropped;
                continue;
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

// Seeded shuffle then disjoint consecutive chunks. When the corpus is too
// small for n_splits x split_size, the split size shrinks to fit.
inline std::vector<std::vector<std::size_t>> make_splits(std::size_t n_records, int n_splits,
                                                         int split_size, std::uint64_t seed,
                                                         bool* shrunk = nullptr) {
    if (n_splits < 1 || split_size < 1) throw ConfigError("make_splits: splits and split size must be >= 1");
    if (shrunk) *shrunk = false;
    std::size_t want = static_cast<std::size_t>(n_splits) * static_cast<std::size_t>(split_size);
    if (want > n_records) {
        split_size = static_cast<int>(n_records / static_cast<std::size_t>(n_splits));
        if (split_size == 0)
            throw ConfigError("make_splits: only " + std::to_string(n_records) + " records for " +
                              std::to_string(n_splits) + " splits");
        if (shrunk) *shrunk = true;
    }
    std::vector<std::size_t> indices(n_records);
    for (std::size_t i = 0; i < n_records; ++i) indices[i] = i;
    seeded_shuffle(indices, seed);
    std::vector<std::vector<std::size_t>> splits;
    splits.reserve(static_cast<std::size_t>(n_splits));
    std::size_t pos = 0;
    for (int s = 0; s < n_splits; ++s) {
        splits.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(pos),
                            indices.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(split_size)));
        pos += static_cast<std::size_t>(split_size);
    }
    return splits;
}

struct RunConfig {
    std::string task_id = "demo";
    Method method = Method::EASE;
    int k_demos = 48;
    int n_candidates = 9;
    double temperature = 0.7;
    int n_splits = 5;
    int split_size = 300;
    std::uint64_t run_seed = 0;
    std::string backend_id = "mock";
    std::string bootstrap_mode = "ep";  // ep | pe
    std::string verbalizers = "v1";     // v1 | v2 | v3
    std::string scorer = "llm";         // llm | lexical (weight source for the weighted methods)
    std::string template_set = "default";
    int k_exemplars = 8;
    int token_budget = 6000;
    int max_tokens = 256;
    int workers = 4;
    bool drop_malformed = false;

    // The semantic parameters only: everything that determines results, and
    // nothing (paths, worker counts) that may differ between run and replay.
    nlohmann::json canonical_echo() const {
        return nlohmann::json{{"task", task_id},
                              {"method", to_string(method)},
                              {"k_demos", k_demos},
                              {"n_candidates", n_candidates},
                              {"temperature", temperature},
                              {"n_splits", n_splits},
                              {"split_size", split_size},
                              {"run_seed", run_seed},
                              {"backend", backend_id},
                              {"bootstrap_mode", bootstrap_mode},
                              {"verbalizers", verbalizers},
                              {"scorer", scorer},
                              {"template_set", template_set},
                              {"k_exemplars", k_exemplars},
                              {"token_budget", token_budget},
                              {"max_tokens", max_tokens},
                              {"drop_malformed", drop_malformed}};
    }
};

struct RunDeps {
    std::shared_ptr<Backend> backend;
    const TemplateLibrary* templates = nullptr;
    std::vector<DatasetRecord> train;
    std::vector<DatasetRecord> test;
    std::optional<TaskSpec> task;  // defaults to builtin_task(cfg.task_id)
    std::optional<BootstrapData> bootstrap;
    std::filesystem::path bootstrap_save_path;  // persist mined data when set
    int dropped_records = 0;
};

struct RunReport {
    nlohmann::json canonical;  // byte-stable content of report.json
    std::vector<double> split_accuracies;
    double mean_accuracy = 0.0;
    std::optional<double> inconsistency;
    int failures = 0;
    std::uint64_t backend_requests = 0;
    std::uint64_t cache_hits = 0;
    std::int64_t wall_ms = 0;
};

namespace detail {

inline nlohmann::json distribution_to_json(const LabelDistribution& d) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < d.labels().size(); ++i) j[d.labels()[i]] = d.probs()[i];
    return j;
}

inline LabelDistribution distribution_from_json(const nlohmann::json& j, const TaskSpec& task) {
    std::vector<double> probs;
    probs.reserve(task.labels.size());
    for (const auto& label : task.labels) probs.push_back(j.at(label).get<double>());
    return LabelDistribution::from_rounded(task.labels, std::move(probs));
}

inline nlohmann::json candidate_to_json(const Candidate& c, const double* weight) {
    nlohmann::json j;
    j["raw_text"] = c.raw_text;
    j["explanation"] = c.explanation;
    j["prediction"] = c.prediction;
    j["parse_ok"] = c.parse_ok;
    j["distribution"] = c.distribution.empty() ? nlohmann::json() : distribution_to_json(c.distribution);
    j["weight"] = weight ? nlohmann::json(*weight) : nlohmann::json();
    return j;
}

inline Candidate candidate_from_json(const nlohmann::json& j, const TaskSpec& task) {
    Candidate c;
    c.raw_text = j.at("raw_text").get<std::string>();
    c.explanation = j.at("explanation").get<std::string>();
    c.prediction = j.at("prediction").get<std::string>();
    c.parse_ok = j.at("parse_ok").get<bool>();
    if (j.contains("distribution") && !j["distribution"].is_null())
        c.distribution = distribution_from_json(j["distribution"], task);
    return c;
}

struct InstanceOutcome {
    nlohmann::json audit;
    bool failed = false;
    bool correct = false;
    std::vector<Candidate> candidates;  // kept for the inconsistency ratio
    bool distributions_collected = false;
};

}  // namespace detail

// Runs one method over the configured splits. The per-instance audit in the
// report is sufficient to recompute every final prediction offline with the
// aggregation functions alone.
inline RunReport run_experiment(const RunConfig& cfg, RunDeps& deps) {
    auto t_start = std::chrono::steady_clock::now();
    if (!deps.backend) throw ConfigError("run_experiment: backend required");
    if (!deps.templates) throw ConfigError("run_experiment: template library required");
    if (cfg.k_demos < 1) throw ConfigError("k must be >= 1");
    if (cfg.n_candidates < 1) throw ConfigError("n must be >= 1");
    if (cfg.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (cfg.token_budget < 1) throw ConfigError("token budget must be >= 1");
    if (cfg.bootstrap_mode != "ep" && cfg.bootstrap_mode != "pe")
        throw ConfigError("bootstrap mode must be ep or pe");

    TaskSpec task = deps.task ? *deps.task : builtin_task(cfg.task_id);
    task.template_set_id = cfg.template_set;
    task.validate();

    Backend& backend = *deps.backend;
    PromptLimits limits;
    limits.max_demos = static_cast<std::size_t>(cfg.k_demos);
    limits.token_budget = static_cast<std::size_t>(cfg.token_budget);
    limits.counter = [&backend](std::string_view s) { return backend.count_tokens(s); };
    Prompter prompter(*deps.templates, task, limits);

    // Demonstration pool: fixed per (task, run seed). Explanation-free train
    // records only qualify for ICL, whose demo block has no explanation slot.
    std::vector<Demonstration> demo_pool;
    for (const auto& rec : deps.train) {
        if (rec.explanation.empty() && cfg.method != Method::ICL) continue;
        demo_pool.push_back({rec.input(), rec.explanation, rec.label});
    }
    seeded_shuffle(demo_pool, derive_seed(cfg.run_seed, "demos"));
    if (demo_pool.size() > static_cast<std::size_t>(cfg.k_demos))
        demo_pool.resize(static_cast<std::size_t>(cfg.k_demos));
    if (demo_pool.empty() && cfg.method != Method::ICL)
        throw ConfigError("no training records carry explanations; cannot build demonstrations");

    bool shrunk = false;
    auto splits = make_splits(deps.test.size(), cfg.n_splits, cfg.split_size,
                              derive_seed(cfg.run_seed, "splits"), &shrunk);

    // Scorer setup for the weighted methods.
    bool needs_scores = cfg.method == Method::EASE || cfg.method == Method::EASE_no_SPA;
    if (cfg.scorer != "llm" && cfg.scorer != "lexical")
        throw ConfigError("unknown scorer '" + cfg.scorer + "' (expected llm or lexical)");
    bool lexical_weights = cfg.scorer == "lexical";
    ScoringDemoSet scoring_demos;
    bool zero_shot_scoring = false;
    ScoreVerbalizers score_verbs = ScoreVerbalizers::preset(cfg.verbalizers);
    if (needs_scores && !lexical_weights) {
        if (deps.bootstrap) {
            scoring_demos = deps.bootstrap->demos;
        } else {
            BootstrapConfig bc;
            bc.k_exemplars = cfg.k_exemplars;
            bc.n_mine = cfg.n_candidates;
            bc.temperature = cfg.temperature;
            bc.seed = derive_seed(cfg.run_seed, "bootstrap");
            bc.mode = cfg.bootstrap_mode == "pe" ? PromptMode::PE : PromptMode::EP;
            bc.max_tokens = cfg.max_tokens;
            bc.workers = cfg.workers;
            NegativesMap negatives = mine_negatives(demo_pool, bc, backend, prompter);
            try {
                scoring_demos = build_scoring_demos(demo_pool, negatives, bc.seed);
            } catch (const EmptyDemoSet&) {
                // degrade to zero-shot scoring below
            }
            if (!deps.bootstrap_save_path.empty())
                save_bootstrap(deps.bootstrap_save_path, {negatives, scoring_demos});
        }
        zero_shot_scoring = scoring_demos.items.empty();
    }
    std::uint64_t score_seed = derive_seed(cfg.run_seed, "score-shuffle");

    bool collect_distributions = cfg.method == Method::EASE || cfg.method == Method::EASE_no_BLS ||
                                 cfg.method == Method::HardArgmax;

    auto process_instance = [&](const DatasetRecord& rec) {
        detail::InstanceOutcome out;
        out.audit["id"] = rec.id;
        out.audit["gold"] = rec.label;
        std::uint64_t shuffle_seed = derive_seed(cfg.run_seed, "shuffle", rec.id);
        InstanceInput input = rec.input();

        AggregationResult result;
        std::vector<Candidate> candidates;
        std::vector<double> weights;

        if (cfg.method == Method::ICL) {
            RenderedPrompt prompt = prompter.task_prompt(PromptMode::ICL, demo_pool, input, shuffle_seed);
            SamplingParams params;
            params.temperature = 0.0;
            params.max_tokens = 16;
            params.stop_sequences = {"\n"};
            Completion c = backend.complete(prompt.text, params, 0);
            Candidate cand;
            cand.raw_text = c.text;
            cand.prediction = ease::detail::match_answer_token(c.text, task);
            cand.parse_ok = !cand.prediction.empty();
            if (!cand.parse_ok) throw AllParsesFailed("icl: answer token did not match any label");
            candidates.push_back(std::move(cand));
            result = majority_vote(task, candidates);
        } else if (cfg.method == Method::Flame) {
            result = flame_baseline(prompter, input, demo_pool, backend, shuffle_seed);
        } else {
            SamplerConfig sc;
            sc.mode = cfg.method == Method::PE ? PromptMode::PE : PromptMode::EP;
            bool greedy_single = cfg.method == Method::PE || cfg.method == Method::EP;
            sc.n_candidates = greedy_single ? 1 : cfg.n_candidates;
            sc.temperature = greedy_single ? 0.0 : cfg.temperature;
            sc.max_tokens = cfg.max_tokens;
            sc.collect_distributions = collect_distributions;
            candidates = sample_candidates(prompter, demo_pool, input, sc, backend, shuffle_seed);

            std::vector<Candidate> voting = candidates;
            if (cfg.drop_malformed) {
                voting.clear();
                for (const auto& c : candidates)
                    if (c.parse_ok) voting.push_back(c);
            }

            if (needs_scores) {
                // Weights are computed and audited per draw; malformed
                // candidates carry empty explanations and score zero.
                for (const auto& c : candidates)
                    weights.push_back(lexical_weights
                                          ? lexical_score(input, c.explanation)
                                          : score_explanation(prompter, input, c.explanation, scoring_demos,
                                                              backend, score_seed, score_verbs));
                std::vector<ScoredCandidate> scored;
                scored.reserve(voting.size());
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    if (cfg.drop_malformed && !candidates[i].parse_ok) continue;
                    scored.emplace_back(candidates[i], weights[i]);
                }
                result = cfg.method == Method::EASE ? weighted_soft_aggregate(task, scored)
                                                    : weighted_hard_vote(task, scored);
            } else if (cfg.method == Method::EASE_no_BLS) {
                result = soft_aggregate(task, voting);
            } else if (cfg.method == Method::HardArgmax) {
                result = hard_argmax_vote(task, voting);
            } else {
                result = majority_vote(task, voting);
            }
        }

        out.candidates = candidates;
        out.distributions_collected = collect_distributions;
        out.correct = result.prediction == rec.label;
        out.audit["prediction"] = result.prediction;
        out.audit["correct"] = out.correct;
        out.audit["strategy"] = to_string(result.strategy);
        out.audit["tie_broken"] = result.tie_broken;
        out.audit["zero_weight_fallback"] = result.zero_weight_fallback;
        nlohmann::json masses = nlohmann::json::object();
        for (std::size_t i = 0; i < result.labels.size(); ++i)
            masses[result.labels[i]] = result.per_label_mass[i];
        out.audit["masses"] = masses;
        nlohmann::json cand_json = nlohmann::json::array();
        for (std::size_t i = 0; i < candidates.size(); ++i)
            cand_json.push_back(
                detail::candidate_to_json(candidates[i], i < weights.size() ? &weights[i] : nullptr));
        out.audit["candidates"] = cand_json;
        out.audit["failed"] = false;
        out.audit["error"] = "";
        return out;
    };

    nlohmann::json split_reports = nlohmann::json::array();
    std::vector<double> split_accuracies;
    int total_failures = 0;
    std::vector<Candidate> all_candidates;
    bool any_collected = false;

    for (const auto& split : splits) {
        std::vector<detail::InstanceOutcome> outcomes(split.size());
        parallel_for_indexed(split.size(), cfg.workers, [&](std::size_t i) {
            const DatasetRecord& rec = deps.test[split[i]];
            try {
                outcomes[i] = process_instance(rec);
            } catch (const Error& e) {
                detail::InstanceOutcome fail;
                fail.failed = true;
                fail.audit["id"] = rec.id;
                fail.audit["gold"] = rec.label;
                fail.audit["failed"] = true;
                fail.audit["error"] = e.what();
                outcomes[i] = std::move(fail);
            }
        });

        int correct = 0, failures = 0;
        nlohmann::json instances = nlohmann::json::array();
        for (auto& out : outcomes) {
            if (out.failed) ++failures;
            else if (out.correct) ++correct;
            if (out.distributions_collected) {
                any_collected = true;
                all_candidates.insert(all_candidates.end(), out.candidates.begin(), out.candidates.end());
            }
            instances.push_back(std::move(out.audit));
        }
        int attempted = static_cast<int>(split.size()) - failures;
        double accuracy = attempted > 0 ? static_cast<double>(correct) / attempted : 0.0;
        split_accuracies.push_back(accuracy);
        total_failures += failures;
        split_reports.push_back({{"accuracy", accuracy}, {"failures", failures}, {"instances", instances}});
    }

    RunReport report;
    report.split_accuracies = split_accuracies;
    double sum = 0.0;
    for (double a : split_accuracies) sum += a;
    report.mean_accuracy = split_accuracies.empty() ? 0.0 : sum / static_cast<double>(split_accuracies.size());
    report.failures = total_failures;
    if (any_collected) report.inconsistency = inconsistency_ratio(all_candidates);

    report.canonical["config"] = cfg.canonical_echo();
    report.canonical["split_size_shrunk"] = shrunk;
    report.canonical["zero_shot_scoring"] = zero_shot_scoring;
    report.canonical["dropped_records"] = deps.dropped_records;
    report.canonical["split_accuracies"] = split_accuracies;
    report.canonical["mean_accuracy"] = report.mean_accuracy;
    report.canonical["failures"] = total_failures;
    report.canonical["inconsistency_ratio"] =
        report.inconsistency ? nlohmann::json(*report.inconsistency) : nlohmann::json();
    report.canonical["splits"] = split_reports;

    report.backend_requests = backend.request_count();
    if (auto* caching = dynamic_cast<CachingBackend*>(&backend)) report.cache_hits = caching->cache_hits();
    report.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t_start)
            .count();
    return report;
}

// report.json is the canonical, replay-comparable artifact; stats.json holds
// the volatile runtime numbers; report.csv is a one-row summary table.
inline void write_report(const RunReport& report, const RunConfig& cfg,
                         const std::filesystem::path& out_dir) {
    write_file_atomic(out_dir / "report.json", report.canonical.dump(2) + "\n");

    nlohmann::json stats;
    stats["wall_ms"] = report.wall_ms;
    stats["backend_requests"] = report.backend_requests;
    stats["cache_hits"] = report.cache_hits;
    write_file_atomic(out_dir / "stats.json", stats.dump(2) + "\n");

    std::ostringstream csv;
    csv << "task,method";
    for (std::size_t i = 0; i < report.split_accuracies.size(); ++i) csv << ",split" << i + 1;
    csv << ",mean,inconsistency,failures\n";
    csv << cfg.task_id << "," << to_string(cfg.method);
    csv.setf(std::ios::fixed);
    csv.precision(4);
    for (double a : report.split_accuracies) csv << "," << a;
    csv << "," << report.mean_accuracy << ",";
    if (report.inconsistency) csv << *report.inconsistency;
    csv << "," << report.failures << "\n";
    write_file_atomic(out_dir / "report.csv", csv.str());
}

}  // namespace ease
