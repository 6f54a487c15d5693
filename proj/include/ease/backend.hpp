#pragma once

// Uniform LLM access: text completion with temperature sampling, verbalizer
// logprob queries, and a persistent disk cache keyed by request content.
// Concrete backends: HttpBackend (http_backend.hpp) and MockBackend
// (mock_backend.hpp).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ease/core.hpp"
#include "ease/util.hpp"

namespace ease {

struct SamplingParams {
    double temperature = 0.7;  // 0 means greedy
    int max_tokens = 256;
    std::vector<std::string> stop_sequences;
    std::uint64_t seed = 0;  // advisory; backends may ignore
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
};

// A model continuation. text excludes the prompt.
struct Completion {
    std::string text;
    std::optional<std::vector<TokenLogprob>> token_logprobs;
    std::string finish_reason;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string id() const = 0;
    virtual std::string model() const = 0;

    // One sampled continuation. sample_index distinguishes the N draws of a
    // multi-sample request so each draw caches separately.
    virtual Completion complete(const std::string& prompt, const SamplingParams& params,
                                int sample_index) = 0;

    // Logprob of each verbalizer's first token at the position following the
    // prompt, keyed by label id. Throws UnsupportedByBackend when the remote
    // API cannot report logprobs.
    virtual std::map<std::string, double> label_logprobs(
        const std::string& prompt, const std::map<std::string, std::string>& verbalizers) = 0;

    virtual std::size_t count_tokens(std::string_view text) const { return approx_token_count(text); }

    // Requests actually served by this backend (cache layers sit above).
    virtual std::uint64_t request_count() const = 0;
};

namespace detail {

inline std::string repr_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string completion_key_material(const std::string& backend_id, const std::string& model,
                                           const std::string& prompt, const SamplingParams& p,
                                           int sample_index) {
    std::string m = "v1|complete|backend=" + backend_id + "|model=" + model +
                    "|temp=" + repr_double(p.temperature) + "|max_tokens=" + std::to_string(p.max_tokens) +
                    "|seed=" + std::to_string(p.seed) + "|stop=";
    for (const auto& s : p.stop_sequences) m += s + "\x1f";
    m += "|sample=" + std::to_string(sample_index) + "|prompt=" + prompt;
    return m;
}

inline std::string logprobs_key_material(const std::string& backend_id, const std::string& model,
                                         const std::string& prompt,
                                         const std::map<std::string, std::string>& verbalizers) {
    std::string m = "v1|logprobs|backend=" + backend_id + "|model=" + model + "|verbalizers=";
    for (const auto& [label, token] : verbalizers) m += label + ":" + token + "\x1f";
    m += "|prompt=" + prompt;
    return m;
}

}  // namespace detail

// One JSON file per entry under <root>/<backend>/<2-hex shard>/<hash>.json.
// Writes are atomic (temp file + rename); identical-content concurrent
// writers are last-write-wins. Entries store their full key material, so a
// hash collision reads as a miss instead of returning foreign data.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }

    static std::string hash_key(const std::string& material) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(material)));
        return buf;
    }

    std::optional<nlohmann::json> get(const std::string& backend_id, const std::string& material) const {
        auto path = entry_path(backend_id, material);
        if (!std::filesystem::exists(path)) return std::nullopt;
        nlohmann::json entry;
        try {
            entry = nlohmann::json::parse(read_file(path));
        } catch (...) {
            return std::nullopt;  // partial/corrupt entry counts as a miss
        }
        if (!entry.contains("key_material") || entry["key_material"].get<std::string>() != material)
            return std::nullopt;
        return entry.at("payload");
    }

    void put(const std::string& backend_id, const std::string& material, const nlohmann::json& payload) const {
        nlohmann::json entry;
        entry["key_material"] = material;
        entry["payload"] = payload;
        write_file_atomic(entry_path(backend_id, material), entry.dump());
    }

private:
    std::filesystem::path entry_path(const std::string& backend_id, const std::string& material) const {
        std::string hash = hash_key(material);
        return root_ / backend_id / hash.substr(0, 2) / (hash + ".json");
    }

    std::filesystem::path root_;
};

// Cache-first wrapper. With an inner backend, misses go through and the
// result is persisted; without one (replay mode) a miss throws
// BackendUnavailable. Replay impersonates the original backend's id/model so
// cache keys line up.
class CachingBackend : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir)
        : inner_(std::move(inner)), cache_(std::move(cache_dir)) {
        if (!inner_) throw ConfigError("CachingBackend: inner backend required (use replay() for cache-only)");
        id_ = inner_->id();
        model_ = inner_->model();
    }

    static std::shared_ptr<CachingBackend> replay(std::filesystem::path cache_dir, std::string backend_id,
                                                  std::string model) {
        return std::shared_ptr<CachingBackend>(
            new CachingBackend(std::move(cache_dir), std::move(backend_id), std::move(model)));
    }

    std::string id() const override { return id_; }
    std::string model() const override { return model_; }

    Completion complete(const std::string& prompt, const SamplingParams& params, int sample_index) override {
        auto material = detail::completion_key_material(id_, model_, prompt, params, sample_index);
        if (auto hit = cache_.get(id_, material)) {
            hits_.fetch_add(1);
            return completion_from_json(*hit);
        }
        if (!inner_) throw BackendUnavailable("replay: cache miss for a required request");
        Completion c = inner_->complete(prompt, params, sample_index);
        misses_.fetch_add(1);
        cache_.put(id_, material, completion_to_json(c));
        return c;
    }

    std::map<std::string, double> label_logprobs(const std::string& prompt,
                                                 const std::map<std::string, std::string>& verbalizers) override {
        auto material = detail::logprobs_key_material(id_, model_, prompt, verbalizers);
        if (auto hit = cache_.get(id_, material)) {
            hits_.fetch_add(1);
            return hit->get<std::map<std::string, double>>();
        }
        if (!inner_) throw BackendUnavailable("replay: cache miss for a required logprob request");
        auto lp = inner_->label_logprobs(prompt, verbalizers);
        misses_.fetch_add(1);
        cache_.put(id_, material, nlohmann::json(lp));
        return lp;
    }

    std::size_t count_tokens(std::string_view text) const override {
        return inner_ ? inner_->count_tokens(text) : approx_token_count(text);
    }

    // Requests that reached the inner backend (i.e. cache misses).
    std::uint64_t request_count() const override { return misses_.load(); }
    std::uint64_t cache_hits() const { return hits_.load(); }

    static nlohmann::json completion_to_json(const Completion& c) {
        nlohmann::json j;
        j["text"] = c.text;
        j["finish_reason"] = c.finish_reason;
        if (c.token_logprobs) {
            auto& arr = j["token_logprobs"] = nlohmann::json::array();
            for (const auto& t : *c.token_logprobs) arr.push_back({{"token", t.token}, {"logprob", t.logprob}});
        }
        return j;
    }

    static Completion completion_from_json(const nlohmann::json& j) {
        Completion c;
        c.text = j.at("text").get<std::string>();
        c.finish_reason = j.value("finish_reason", std::string());
        if (j.contains("token_logprobs")) {
            std::vector<TokenLogprob> v;
            for (const auto& t : j.at("token_logprobs"))
                v.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
            c.token_logprobs = std::move(v);
        }
        return c;
    }

private:
    CachingBackend(std::filesystem::path cache_dir, std::string backend_id, std::string model)
        : inner_(nullptr), cache_(std::move(cache_dir)), id_(std::move(backend_id)), model_(std::move(model)) {}

    std::shared_ptr<Backend> inner_;
    ResponseCache cache_;
    std::string id_;
    std::string model_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
};

// Verbalizer logprobs with a sampling fallback for backends that cannot
// report logprobs: draw m one-token samples at temperature 1 and use
// smoothed verbalizer frequencies ln((count + 0.5) / (m + 0.5 * L)).
inline std::map<std::string, double> label_logprobs_or_frequency(
    Backend& backend, const std::string& prompt, const std::map<std::string, std::string>& verbalizers,
    int m = 16) {
    try {
        return backend.label_logprobs(prompt, verbalizers);
    } catch (const UnsupportedByBackend&) {
    }
    SamplingParams params;
    params.temperature = 1.0;
    params.max_tokens = 4;
    std::map<std::string, int> counts;
    for (const auto& [label, token] : verbalizers) counts[label] = 0;
    for (int i = 0; i < m; ++i) {
        // Distinct sample indices keep these draws from colliding with the
        // candidate draws in the cache.
        Completion c = backend.complete(prompt, params, 1'000'000 + i);
        std::string tok = first_alnum_token(c.text);
        for (const auto& [label, verb] : verbalizers)
            if (tok == first_alnum_token(verb)) counts[label] += 1;
    }
    std::map<std::string, double> out;
    double denom = m + 0.5 * static_cast<double>(verbalizers.size());
    for (const auto& [label, count] : counts) out[label] = std::log((count + 0.5) / denom);
    return out;
}

}  // namespace ease
