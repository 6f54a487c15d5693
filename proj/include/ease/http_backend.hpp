#pragma once

// OpenAI-compatible chat/completions client. Requests are bounded by an
// in-flight semaphore and retried with exponential backoff on network
// errors, 5xx, and 429. Build with CPPHTTPLIB_OPENSSL_SUPPORT for https
// endpoints; plain http works out of the box (local inference servers).

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ease/backend.hpp"

namespace ease {

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    double multiplier = 2.0;
    double jitter = 0.1;  // +/- fraction of the delay
    std::function<void(std::chrono::milliseconds)> sleep_fn;  // injectable for tests

    std::chrono::milliseconds delay_for(int attempt) const {
        double d = static_cast<double>(base_delay.count());
        for (int i = 0; i < attempt; ++i) d *= multiplier;
        if (jitter > 0.0) {
            thread_local std::mt19937_64 rng{std::random_device{}()};
            std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
            d *= u(rng);
        }
        return std::chrono::milliseconds(static_cast<long long>(d));
    }

    void sleep(std::chrono::milliseconds d) const {
        if (sleep_fn) sleep_fn(d);
        else std::this_thread::sleep_for(d);
    }
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://localhost:8000
    std::string api_key;
    std::string model;
    std::string chat_path = "/v1/chat/completions";
    int max_in_flight = 4;
    int top_logprobs = 20;
    int timeout_seconds = 120;
    RetryPolicy retry;
    bool trace = false;

    static HttpBackendConfig from_env() {
        HttpBackendConfig cfg;
        if (const char* v = std::getenv("EASE_API_BASE")) cfg.base_url = v;
        if (const char* v = std::getenv("EASE_API_KEY")) cfg.api_key = v;
        if (const char* v = std::getenv("EASE_MODEL")) cfg.model = v;
        if (const char* v = std::getenv("EASE_MAX_IN_FLIGHT")) cfg.max_in_flight = std::max(1, std::atoi(v));
        return cfg;
    }
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)), in_flight_(cfg_.max_in_flight) {
        if (cfg_.base_url.empty()) throw ConfigError("http backend: base URL not set (EASE_API_BASE)");
        if (cfg_.model.empty()) throw ConfigError("http backend: model not set (EASE_MODEL)");
    }

    std::string id() const override { return "openai"; }
    std::string model() const override { return cfg_.model; }

    Completion complete(const std::string& prompt, const SamplingParams& params, int sample_index) override {
        nlohmann::json body = request_body(prompt, params);
        (void)sample_index;  // cache-key concern only; the API draw is independent
        nlohmann::json resp = post_with_retries(body);
        try {
            const auto& choice = resp.at("choices").at(0);
            Completion c;
            c.text = choice.at("message").at("content").get<std::string>();
            c.finish_reason = choice.value("finish_reason", std::string());
            if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
                choice["logprobs"].contains("content")) {
                std::vector<TokenLogprob> lps;
                for (const auto& t : choice["logprobs"]["content"])
                    lps.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
                c.token_logprobs = std::move(lps);
            }
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw MalformedResponse(std::string("completion response: ") + e.what());
        }
    }

    std::map<std::string, double> label_logprobs(const std::string& prompt,
                                                 const std::map<std::string, std::string>& verbalizers) override {
        SamplingParams params;
        params.temperature = 0.0;
        params.max_tokens = 1;
        nlohmann::json body = request_body(prompt, params);
        body["logprobs"] = true;
        body["top_logprobs"] = cfg_.top_logprobs;
        nlohmann::json resp = post_with_retries(body);

        nlohmann::json top;
        try {
            const auto& choice = resp.at("choices").at(0);
            if (!choice.contains("logprobs") || choice["logprobs"].is_null())
                throw UnsupportedByBackend("backend returned no logprobs field");
            top = choice.at("logprobs").at("content").at(0).at("top_logprobs");
        } catch (const UnsupportedByBackend&) {
            throw;
        } catch (const nlohmann::json::exception&) {
            throw UnsupportedByBackend("backend response lacks top_logprobs");
        }

        double floor = 0.0;
        bool have_floor = false;
        std::vector<std::pair<std::string, double>> tokens;
        for (const auto& t : top) {
            tokens.emplace_back(t.at("token").get<std::string>(), t.at("logprob").get<double>());
            if (!have_floor || tokens.back().second < floor) {
                floor = tokens.back().second;
                have_floor = true;
            }
        }
        if (tokens.empty()) throw UnsupportedByBackend("empty top_logprobs");

        std::map<std::string, double> out;
        for (const auto& [label, verb] : verbalizers) {
            std::string want = first_alnum_token(verb);
            double best = floor - 2.3;  // below everything the API showed us
            for (const auto& [token, lp] : tokens) {
                std::string got = first_alnum_token(token);
                // The API reports tokenizer pieces; accept an exact first-word
                // match or a piece that prefixes the verbalizer.
                bool match = !got.empty() && (got == want || (want.rfind(got, 0) == 0));
                if (match && lp > best) best = lp;
            }
            out[label] = best;
        }
        return out;
    }

    std::uint64_t request_count() const override { return requests_.load(); }

private:
    nlohmann::json request_body(const std::string& prompt, const SamplingParams& params) const {
        nlohmann::json body;
        body["model"] = cfg_.model;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = params.temperature;
        body["max_tokens"] = params.max_tokens;
        if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;
        if (params.seed != 0) body["seed"] = params.seed;
        return body;
    }

    nlohmann::json post_with_retries(const nlohmann::json& body) {
        std::string payload = body.dump();
        std::string last_error;
        bool rate_limited = false;
        for (int attempt = 0; attempt < cfg_.retry.attempts; ++attempt) {
            if (attempt > 0) cfg_.retry.sleep(cfg_.retry.delay_for(attempt - 1));
            in_flight_.acquire();
            requests_.fetch_add(1);
            httplib::Client client(cfg_.base_url);
            client.set_connection_timeout(cfg_.timeout_seconds, 0);
            client.set_read_timeout(cfg_.timeout_seconds, 0);
            httplib::Headers headers;
            if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
            if (cfg_.trace) trace_line("request " + cfg_.chat_path + " " + payload);
            auto res = client.Post(cfg_.chat_path, headers, payload, "application/json");
            in_flight_.release();

            if (!res) {
                last_error = "connection error (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (cfg_.trace) trace_line("response " + std::to_string(res->status) + " " + res->body);
            if (res->status == 429) {
                rate_limited = true;
                last_error = "HTTP 429";
                continue;
            }
            if (res->status >= 500) {
                rate_limited = false;
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedResponse(std::string("response is not JSON: ") + e.what());
            }
        }
        if (rate_limited) throw RateLimited("retry budget exhausted: " + last_error);
        throw BackendUnavailable("retry budget exhausted: " + last_error);
    }

    void trace_line(const std::string& line) {
        static std::mutex trace_mutex;
        std::lock_guard<std::mutex> lock(trace_mutex);
        std::cerr << "[trace] " << line << "\n";
    }

    HttpBackendConfig cfg_;
    std::counting_semaphore<1024> in_flight_;
    std::atomic<std::uint64_t> requests_{0};
};

}  // namespace ease
