#pragma once

// Scriptable deterministic backend for tests and offline runs. A script is
// an ordered rule list; the first rule whose matcher accepts the prompt
// serves the request. Completions are selected by sample index (greedy
// requests always take the first entry), so concurrent draws stay
// deterministic. Label-probability sequences are consumed in arrival order.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ease/backend.hpp"

namespace ease {

struct MockRule {
    std::string name;
    std::string match_substring;              // empty matches everything
    std::optional<std::string> match_regex;   // searched, not anchored
    std::vector<std::string> completions;
    // Each entry maps verbalizer token (or label id) -> probability. Zero or
    // missing entries are floored at 1e-12 before the log.
    std::vector<std::map<std::string, double>> distributions;
    bool cycle = false;  // wrap around instead of throwing ScriptExhausted
};

struct MockRequest {
    enum class Kind { Complete, Logprobs };
    Kind kind = Kind::Complete;
    std::string prompt;
    double temperature = 0.0;
    int sample_index = 0;
    std::string rule;
};

class MockBackend : public Backend {
public:
    explicit MockBackend(std::vector<MockRule> rules, std::string model = "scripted")
        : model_(std::move(model)) {
        for (auto& rule : rules) {
            RuleState st;
            st.rule = std::move(rule);
            if (st.rule.match_regex) st.regex = std::regex(*st.rule.match_regex);
            rules_.push_back(std::move(st));
        }
    }

    std::string id() const override { return "mock"; }
    std::string model() const override { return model_; }

    Completion complete(const std::string& prompt, const SamplingParams& params, int sample_index) override {
        std::lock_guard<std::mutex> lock(mutex_);
        RuleState& st = find_rule(prompt, /*want_completions=*/true);
        const auto& list = st.rule.completions;
        std::size_t idx;
        if (params.temperature == 0.0) {
            idx = 0;  // greedy ignores the draw index
        } else if (static_cast<std::size_t>(sample_index) < list.size()) {
            idx = static_cast<std::size_t>(sample_index);
        } else if (st.rule.cycle) {
            idx = static_cast<std::size_t>(sample_index) % list.size();
        } else {
            throw ScriptExhausted("rule '" + st.rule.name + "' has " + std::to_string(list.size()) +
                                  " completions, draw " + std::to_string(sample_index) + " requested");
        }
        record(MockRequest::Kind::Complete, prompt, params.temperature, sample_index, st.rule.name);
        Completion c;
        c.text = list[idx];
        c.finish_reason = "stop";
        return c;
    }

    std::map<std::string, double> label_logprobs(const std::string& prompt,
                                                 const std::map<std::string, std::string>& verbalizers) override {
        std::lock_guard<std::mutex> lock(mutex_);
        RuleState& st = find_rule(prompt, /*want_completions=*/false);
        const auto& seq = st.rule.distributions;
        std::size_t idx = st.logprob_calls++;
        if (idx >= seq.size()) {
            if (st.rule.cycle || seq.size() == 1) {
                idx %= seq.size();
            } else {
                throw ScriptExhausted("rule '" + st.rule.name + "' has " + std::to_string(seq.size()) +
                                      " distributions, call " + std::to_string(idx) + " requested");
            }
        }
        record(MockRequest::Kind::Logprobs, prompt, 0.0, static_cast<int>(idx), st.rule.name);
        const auto& dist = seq[idx];
        std::map<std::string, double> out;
        for (const auto& [label, token] : verbalizers) {
            double p = 1e-12;
            if (auto it = dist.find(token); it != dist.end()) p = it->second;
            else if (auto it2 = dist.find(label); it2 != dist.end()) p = it2->second;
            out[label] = std::log(std::max(p, 1e-12));
        }
        return out;
    }

    std::uint64_t request_count() const override {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_.size();
    }

    std::vector<MockRequest> requests() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_;
    }

    std::uint64_t requests_of_kind(MockRequest::Kind kind) const {
        std::lock_guard<std::mutex> lock(mutex_);
        std::uint64_t n = 0;
        for (const auto& r : requests_)
            if (r.kind == kind) ++n;
        return n;
    }

private:
    struct RuleState {
        MockRule rule;
        std::optional<std::regex> regex;
        std::size_t logprob_calls = 0;
    };

    RuleState& find_rule(const std::string& prompt, bool want_completions) {
        for (auto& st : rules_) {
            bool has_payload = want_completions ? !st.rule.completions.empty() : !st.rule.distributions.empty();
            if (!has_payload) continue;
            if (!st.rule.match_substring.empty() && prompt.find(st.rule.match_substring) == std::string::npos)
                continue;
            if (st.regex && !std::regex_search(prompt, *st.regex)) continue;
            return st;
        }
        throw ScriptExhausted(std::string("no mock rule matches ") +
                              (want_completions ? "completion" : "logprob") + " prompt starting '" +
                              prompt.substr(0, std::min<std::size_t>(prompt.size(), 60)) + "'");
    }

    void record(MockRequest::Kind kind, const std::string& prompt, double temperature, int sample_index,
                const std::string& rule) {
        requests_.push_back({kind, prompt, temperature, sample_index, rule});
    }

    std::string model_;
    mutable std::mutex mutex_;
    std::vector<RuleState> rules_;
    std::vector<MockRequest> requests_;
};

inline std::shared_ptr<MockBackend> mock_program(std::vector<MockRule> rules, std::string model = "scripted") {
    return std::make_shared<MockBackend>(std::move(rules), std::move(model));
}

// Script file format (JSON):
//   {"model": "scripted", "rules": [{"name": ..., "match_substring": ...,
//    "match_regex": ..., "completions": [...], "distributions": [{...}],
//    "cycle": false}]}
inline std::shared_ptr<MockBackend> load_mock_script(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad mock script " + path.string() + ": " + e.what());
    }
    std::vector<MockRule> rules;
    for (const auto& rj : j.value("rules", nlohmann::json::array())) {
        MockRule r;
        r.name = rj.value("name", "rule" + std::to_string(rules.size()));
        r.match_substring = rj.value("match_substring", "");
        if (rj.contains("match_regex")) r.match_regex = rj.at("match_regex").get<std::string>();
        for (const auto& c : rj.value("completions", nlohmann::json::array()))
            r.completions.push_back(c.get<std::string>());
        for (const auto& d : rj.value("distributions", nlohmann::json::array()))
            r.distributions.push_back(d.get<std::map<std::string, double>>());
        r.cycle = rj.value("cycle", false);
        rules.push_back(std::move(r));
    }
    return mock_program(std::move(rules), j.value("model", std::string("scripted")));
}

}  // namespace ease
