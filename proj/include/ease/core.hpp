#pragma once

// Core domain model: task definitions, demonstrations, label distributions,
// sampled candidates, and the numeric primitives everything else builds on.
// All types here are immutable after construction and safe to share across
// threads; all operations are pure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ease/util.hpp"

namespace ease {

constexpr double kProbTolerance = 1e-9;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shared error vocabulary. Each maps to one failure mode; the CLI maps
// families of these onto exit codes.
struct MissingLabel : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct MissingPlaceholder : Error { using Error::Error; };
struct BudgetTooSmall : Error { using Error::Error; };
struct BackendUnavailable : Error { using Error::Error; };
struct RateLimited : Error { using Error::Error; };
struct MalformedResponse : Error { using Error::Error; };
struct UnsupportedByBackend : Error { using Error::Error; };
struct ScriptExhausted : Error { using Error::Error; };
struct AllParsesFailed : Error { using Error::Error; };
struct EmptyDemoSet : Error { using Error::Error; };

// A classification task: ordered label set, one surface verbalizer per label,
// and the template bindings used to build prompts. Label order is fixed for
// the life of a run; tie-breaking depends on it.
struct TaskSpec {
    std::string task_id;
    std::vector<std::string> labels;
    std::map<std::string, std::string> verbalizers;  // label id -> surface token
    std::string answer_choices_text;                 // e.g. "Yes, Maybe, and No"
    std::string template_set_id = "default";
    std::vector<std::string> required_fields;        // input fields the templates need

    int index_of(std::string_view label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<int>(i);
        return -1;
    }

    const std::string& verbalizer(const std::string& label) const {
        auto it = verbalizers.find(label);
        if (it == verbalizers.end()) throw MissingLabel("no verbalizer for label '" + label + "'");
        return it->second;
    }

    void validate() const {
        if (labels.empty()) throw SchemaError("task '" + task_id + "': empty label set");
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i] == labels[j])
                    throw SchemaError("task '" + task_id + "': duplicate label '" + labels[i] + "'");
        std::vector<std::string> seen;
        for (const auto& label : labels) {
            auto it = verbalizers.find(label);
            if (it == verbalizers.end())
                throw SchemaError("task '" + task_id + "': label '" + label + "' has no verbalizer");
            if (it->second.empty())
                throw SchemaError("task '" + task_id + "': empty verbalizer for '" + label + "'");
            if (std::find(seen.begin(), seen.end(), it->second) != seen.end())
                throw SchemaError("task '" + task_id + "': duplicate verbalizer '" + it->second + "'");
            seen.push_back(it->second);
        }
    }
};

// One test or train instance's input: named text fields keyed by the
// placeholder names the bound templates use.
struct InstanceInput {
    std::string id;
    std::map<std::string, std::string> fields;
};

// A labeled demonstration with its ground-truth explanation.
struct Demonstration {
    InstanceInput input;
    std::string explanation;
    std::string label;
};

// Normalized probability mass over a task's labels, stored in task label
// order. Engine-produced distributions always go through normalized() /
// softmax and sum to 1 within 1e-9. from_rounded() exists to carry values
// transcribed from external sources that were rounded before publication;
// it validates loosely and stores them untouched so downstream sums are
// reproducible against the source.
class LabelDistribution {
public:
    LabelDistribution() = default;

    static LabelDistribution normalized(std::vector<std::string> labels, std::vector<double> weights) {
        check_shape(labels, weights);
        double sum = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w)) throw NonFinite("distribution weight is not finite");
            if (w < 0.0) throw NonFinite("distribution weight is negative");
            sum += w;
        }
        if (sum <= 0.0) throw NonFinite("distribution weights sum to zero");
        for (double& w : weights) w /= sum;
        return LabelDistribution(std::move(labels), std::move(weights));
    }

    static LabelDistribution from_rounded(std::vector<std::string> labels, std::vector<double> probs,
                                          double tolerance = 0.05) {
        check_shape(labels, probs);
        double sum = 0.0;
        for (double p : probs) {
            if (!std::isfinite(p) || p < 0.0 || p > 1.0)
                throw NonFinite("rounded probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > tolerance)
            throw NonFinite("rounded probabilities sum to " + std::to_string(sum));
        return LabelDistribution(std::move(labels), std::move(probs));
    }

    static LabelDistribution uniform(const TaskSpec& task) {
        std::vector<double> p(task.labels.size(), 1.0 / static_cast<double>(task.labels.size()));
        return LabelDistribution(task.labels, std::move(p));
    }

    static LabelDistribution one_hot(const TaskSpec& task, const std::string& label) {
        int idx = task.index_of(label);
        if (idx < 0) throw UnknownLabel("one_hot: unknown label '" + label + "'");
        std::vector<double> p(task.labels.size(), 0.0);
        p[static_cast<std::size_t>(idx)] = 1.0;
        return LabelDistribution(task.labels, std::move(p));
    }

    bool empty() const { return labels_.empty(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<double>& probs() const { return probs_; }

    double prob(std::string_view label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return probs_[i];
        throw MissingLabel(std::string("no such label '") + std::string(label) + "'");
    }

    bool operator==(const LabelDistribution& other) const {
        return labels_ == other.labels_ && probs_ == other.probs_;
    }

private:
    LabelDistribution(std::vector<std::string> labels, std::vector<double> probs)
        : labels_(std::move(labels)), probs_(std::move(probs)) {}

    static void check_shape(const std::vector<std::string>& labels, const std::vector<double>& values) {
        if (labels.empty()) throw MissingLabel("distribution over empty label set");
        if (labels.size() != values.size())
            throw MissingLabel("label/probability count mismatch");
    }

    std::vector<std::string> labels_;
    std::vector<double> probs_;
};

// One sampled (explanation, prediction) draw. raw_text is the verbatim model
// continuation and survives serialization bit-identically for audit.
struct Candidate {
    std::string explanation;
    std::string prediction;  // label id; empty when !parse_ok
    LabelDistribution distribution;
    std::string raw_text;
    bool parse_ok = false;
};

struct ScoredCandidate {
    Candidate candidate;
    double weight = 0.0;  // explanation quality in [0,1]

    ScoredCandidate() = default;
    ScoredCandidate(Candidate c, double w) : candidate(std::move(c)), weight(w) {
        if (!std::isfinite(w) || w < 0.0 || w > 1.0)
            throw NonFinite("candidate weight outside [0,1]: " + std::to_string(w));
    }
};

enum class Polarity { Positive, Negative };

// A scoring demonstration: an instance input paired with one explanation
// labeled good (ground truth) or bad (mined from wrong predictions).
struct ScoringDemo {
    InstanceInput input;
    std::string explanation;
    Polarity polarity = Polarity::Positive;
};

struct ScoringDemoSet {
    std::vector<ScoringDemo> items;
    std::uint64_t build_seed = 0;
};

// Softmax over per-label logprobs. Shift-invariant by construction (max is
// subtracted before exponentiation).
inline LabelDistribution normalize_over_verbalizers(const std::vector<std::string>& ordered_labels,
                                                    const std::map<std::string, double>& logprobs) {
    std::vector<double> lp;
    lp.reserve(ordered_labels.size());
    for (const auto& label : ordered_labels) {
        auto it = logprobs.find(label);
        if (it == logprobs.end()) throw MissingLabel("missing logprob for label '" + label + "'");
        if (!std::isfinite(it->second)) throw NonFinite("logprob for '" + label + "' is not finite");
        lp.push_back(it->second);
    }
    double max_lp = *std::max_element(lp.begin(), lp.end());
    std::vector<double> weights;
    weights.reserve(lp.size());
    for (double v : lp) weights.push_back(std::exp(v - max_lp));
    return LabelDistribution::normalized(ordered_labels, std::move(weights));
}

inline LabelDistribution normalize_over_verbalizers(const TaskSpec& task,
                                                    const std::map<std::string, double>& logprobs) {
    return normalize_over_verbalizers(task.labels, logprobs);
}

struct ArgmaxResult {
    std::size_t index = 0;
    bool tie_broken = false;
};

// First index holding the maximum (exact comparison); tie_broken reports
// whether any later entry equals it.
inline ArgmaxResult argmax_with_ties(std::span<const double> values) {
    if (values.empty()) throw Error("argmax over empty range");
    ArgmaxResult r;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[r.index]) r.index = i;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (i != r.index && values[i] == values[r.index]) r.tie_broken = true;
    return r;
}

inline std::string argmax_label(const LabelDistribution& d) {
    auto r = argmax_with_ties(d.probs());
    return d.labels()[r.index];
}

}  // namespace ease
