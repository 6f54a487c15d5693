#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "ease/backend.hpp"
#include "ease/http_backend.hpp"
#include "ease/mock_backend.hpp"
#include "testutil.hpp"

using namespace ease;

TEST_CASE("mock backend follows its script") {
    SUBCASE("scripted echo") {
        auto mock = mock_program({{.name = "all", .completions = {"Explanation: X Answer: Yes"}}});
        SamplingParams params;
        params.temperature = 0.0;
        CHECK(mock->complete("anything", params, 0).text == "Explanation: X Answer: Yes");
    }
    SUBCASE("nine draws arrive in script order") {
        std::vector<std::string> script;
        for (int i = 0; i < 9; ++i) script.push_back("candidate " + std::to_string(i));
        auto mock = mock_program({{.name = "sampler", .completions = script}});
        SamplingParams params;
        params.temperature = 0.7;
        for (int i = 0; i < 9; ++i) CHECK(mock->complete("p", params, i).text == script[i]);
        CHECK(mock->request_count() == 9);
    }
    SUBCASE("greedy ignores the draw index") {
        auto mock = mock_program({{.name = "r", .completions = {"first", "second", "third"}}});
        SamplingParams greedy;
        greedy.temperature = 0.0;
        CHECK(mock->complete("p", greedy, 4).text == "first");
        CHECK(mock->complete("p", greedy, 7).text == "first");
    }
    SUBCASE("exhaustion throws unless the rule cycles") {
        auto strict = mock_program({{.name = "r", .completions = {"only"}}});
        SamplingParams params;
        params.temperature = 1.0;
        CHECK_THROWS_AS(strict->complete("p", params, 3), ScriptExhausted);
        auto cyclic = mock_program({{.name = "r", .completions = {"a", "b"}, .cycle = true}});
        CHECK(cyclic->complete("p", params, 5).text == "b");
    }
    SUBCASE("substring and regex matchers route prompts") {
        auto mock = mock_program({
            {.name = "scorer", .match_substring = "Explanation:", .completions = {"scored"}},
            {.name = "fallback", .completions = {"plain"}},
        });
        SamplingParams params;
        params.temperature = 0.0;
        CHECK(mock->complete("Explanation: something", params, 0).text == "scored");
        CHECK(mock->complete("no marker here", params, 0).text == "plain");

        auto rx = mock_program({{.name = "rx", .match_regex = "^Question: [0-9]+", .completions = {"hit"}},
                                {.name = "rest", .completions = {"miss"}}});
        CHECK(rx->complete("Question: 42", params, 0).text == "hit");
        CHECK(rx->complete("Question: forty-two", params, 0).text == "miss");
    }
    SUBCASE("no matching rule") {
        auto mock = mock_program({{.name = "narrow", .match_substring = "XYZZY", .completions = {"x"}}});
        SamplingParams params;
        CHECK_THROWS_AS(mock->complete("unmatched", params, 0), ScriptExhausted);
    }
}

TEST_CASE("mock label logprobs") {
    TaskSpec task = test::esnli_task();
    SUBCASE("token-keyed probabilities come back as logs") {
        auto mock = mock_program({{.name = "lp", .distributions = {{{"Yes", 0.9}, {"No", 0.1}}}}});
        auto lp = mock->label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        CHECK(lp["pos"] == doctest::Approx(std::log(0.9)).epsilon(1e-12));
        CHECK(lp["neg"] == doctest::Approx(std::log(0.1)).epsilon(1e-12));
    }
    SUBCASE("uniform over three labels") {
        auto mock = mock_program(
            {{.name = "u", .distributions = {{{"Yes", 1.0}, {"Maybe", 1.0}, {"No", 1.0}}}}});
        auto lp = mock->label_logprobs("p", task.verbalizers);
        auto d = normalize_over_verbalizers(task, lp);
        for (const auto& label : task.labels) CHECK(d.prob(label) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    SUBCASE("a sharply contradicting NLI row normalizes close to its published values") {
        auto mock = mock_program(
            {{.name = "row", .distributions = {{{"Yes", 0.001}, {"Maybe", 0.042}, {"No", 0.953}}}}});
        auto lp = mock->label_logprobs("p", task.verbalizers);
        auto d = normalize_over_verbalizers(task, lp);
        // Exact: the scripted values renormalized by their sum (0.996).
        CHECK(d.prob("entail") == doctest::Approx(0.001 / 0.996).epsilon(1e-9));
        CHECK(d.prob("neutral") == doctest::Approx(0.042 / 0.996).epsilon(1e-9));
        CHECK(d.prob("contradict") == doctest::Approx(0.953 / 0.996).epsilon(1e-9));
        // And within rounding distance of the source row itself.
        CHECK(d.prob("entail") == doctest::Approx(0.001).epsilon(5e-3));
        CHECK(d.prob("neutral") == doctest::Approx(0.042).scale(1.0).epsilon(5e-3));
        CHECK(d.prob("contradict") == doctest::Approx(0.953).epsilon(5e-3));
    }
    SUBCASE("zero probabilities are floored, not infinite") {
        auto mock = mock_program({{.name = "z", .distributions = {{{"Yes", 0.0}, {"No", 1.0}}}}});
        auto lp = mock->label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        CHECK(std::isfinite(lp["pos"]));
        auto d = normalize_over_verbalizers({"pos", "neg"}, lp);
        CHECK(d.prob("pos") < 1e-9);
    }
    SUBCASE("distribution sequences consume in arrival order") {
        auto mock = mock_program(
            {{.name = "seq", .distributions = {{{"Yes", 0.9}, {"No", 0.1}}, {{"Yes", 0.2}, {"No", 0.8}}}}});
        auto first = mock->label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        auto second = mock->label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        CHECK(first["pos"] > first["neg"]);
        CHECK(second["pos"] < second["neg"]);
        CHECK_THROWS_AS(mock->label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}}), ScriptExhausted);
    }
}

TEST_CASE("disk cache round trip and hit behavior") {
    test::TempDir tmp;
    SamplingParams params;
    params.temperature = 0.7;

    auto inner = mock_program({{.name = "r", .completions = {"one", "two"}, .cycle = true}});
    CachingBackend cached(inner, tmp.path() / "cache");

    auto first = cached.complete("prompt", params, 0);
    CHECK(first.text == "one");
    CHECK(inner->request_count() == 1);

    SUBCASE("second identical request is served from disk") {
        auto again = cached.complete("prompt", params, 0);
        CHECK(again.text == "one");
        CHECK(inner->request_count() == 1);  // zero new network requests
        CHECK(cached.cache_hits() == 1);
        CHECK(cached.request_count() == 1);
    }
    SUBCASE("sample index distinguishes draws") {
        auto second = cached.complete("prompt", params, 1);
        CHECK(second.text == "two");
        CHECK(inner->request_count() == 2);
    }
    SUBCASE("params are part of the key") {
        SamplingParams other = params;
        other.temperature = 0.0;
        (void)cached.complete("prompt", other, 0);
        CHECK(inner->request_count() == 2);
    }
    SUBCASE("logprob queries cache too") {
        auto lp_backend = mock_program({{.name = "lp", .distributions = {{{"Yes", 0.6}, {"No", 0.4}}}}});
        CachingBackend lp_cached(lp_backend, tmp.path() / "cache2");
        auto a = lp_cached.label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        auto b = lp_cached.label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}});
        CHECK(a == b);
        CHECK(lp_backend->request_count() == 1);
    }
}

TEST_CASE("replay backend serves only from cache") {
    test::TempDir tmp;
    SamplingParams params;
    auto inner = mock_program({{.name = "r", .completions = {"hello"}}});
    {
        CachingBackend cached(inner, tmp.path() / "cache");
        (void)cached.complete("prompt", params, 0);
    }
    auto replay = CachingBackend::replay(tmp.path() / "cache", "mock", "scripted");
    CHECK(replay->complete("prompt", params, 0).text == "hello");
    CHECK(replay->request_count() == 0);
    CHECK_THROWS_AS(replay->complete("unseen prompt", params, 0), BackendUnavailable);
}

TEST_CASE("cache entries verify their key material") {
    test::TempDir tmp;
    ResponseCache cache(tmp.path());
    cache.put("mock", "material-a", {{"x", 1}});
    CHECK(cache.get("mock", "material-a").has_value());
    CHECK_FALSE(cache.get("mock", "material-b").has_value());
    // Corrupt entry reads as a miss.
    auto hash = ResponseCache::hash_key("material-a");
    write_file_atomic(tmp.path() / "mock" / hash.substr(0, 2) / (hash + ".json"), "{not json");
    CHECK_FALSE(cache.get("mock", "material-a").has_value());
}

TEST_CASE("frequency fallback estimates from one-token samples") {
    // A backend that refuses logprobs but samples verbalizer tokens 3:1.
    class NoLogprobBackend : public Backend {
    public:
        std::string id() const override { return "nolp"; }
        std::string model() const override { return "m"; }
        Completion complete(const std::string&, const SamplingParams&, int sample_index) override {
            calls_++;
            return {sample_index % 4 == 0 ? " No" : " Yes", std::nullopt, "stop"};
        }
        std::map<std::string, double> label_logprobs(const std::string&,
                                                     const std::map<std::string, std::string>&) override {
            throw UnsupportedByBackend("no logprobs here");
        }
        std::uint64_t request_count() const override { return calls_; }

    private:
        std::atomic<std::uint64_t> calls_{0};
    };

    NoLogprobBackend backend;
    auto lp = label_logprobs_or_frequency(backend, "p", {{"pos", "Yes"}, {"neg", "No"}}, 16);
    CHECK(backend.request_count() == 16);
    auto d = normalize_over_verbalizers({"pos", "neg"}, lp);
    CHECK(d.prob("pos") == doctest::Approx(12.5 / 17.0).epsilon(1e-9));  // (12 + .5) / (16 + 1)
    CHECK(d.prob("pos") + d.prob("neg") == doctest::Approx(1.0).epsilon(1e-12));
}

namespace {

// Minimal OpenAI-style server for driving HttpBackend.
class FakeServer {
public:
    explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpBackendConfig test_config(const std::string& base_url) {
    HttpBackendConfig cfg;
    cfg.base_url = base_url;
    cfg.api_key = "test-key";
    cfg.model = "test-model";
    cfg.retry.attempts = 3;
    cfg.retry.base_delay = std::chrono::milliseconds(1);
    cfg.retry.jitter = 0.0;
    cfg.retry.sleep_fn = [](std::chrono::milliseconds) {};
    return cfg;
}

}  // namespace

TEST_CASE("http backend completes against an OpenAI-style server") {
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
        hits++;
        auto body = nlohmann::json::parse(req.body);
        CHECK(body.at("model") == "test-model");
        CHECK(req.get_header_value("Authorization") == "Bearer test-key");
        nlohmann::json out = {
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"}, {"content", "Explanation: fine.\nAnswer: Yes"}}},
                   {"finish_reason", "stop"}}})}};
        res.set_content(out.dump(), "application/json");
    });
    HttpBackend backend(test_config(server.base_url()));
    SamplingParams params;
    auto c = backend.complete("hello", params, 0);
    CHECK(c.text == "Explanation: fine.\nAnswer: Yes");
    CHECK(c.finish_reason == "stop");
    CHECK(hits == 1);
}

TEST_CASE("http backend reads top logprobs for verbalizers") {
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json top = nlohmann::json::array({
            {{"token", " Yes"}, {"logprob", -0.2}},
            {{"token", " No"}, {"logprob", -1.7}},
            {{"token", " Perhaps"}, {"logprob", -3.0}},
        });
        nlohmann::json out = {
            {"choices",
             nlohmann::json::array(
                 {{{"message", {{"role", "assistant"}, {"content", "Yes"}}},
                   {"finish_reason", "stop"},
                   {"logprobs",
                    {{"content", nlohmann::json::array({{{"token", " Yes"},
                                                         {"logprob", -0.2},
                                                         {"top_logprobs", top}}})}}}}})}};
        res.set_content(out.dump(), "application/json");
    });
    HttpBackend backend(test_config(server.base_url()));
    auto lp = backend.label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}, {"other", "Zebra"}});
    CHECK(lp["pos"] == doctest::Approx(-0.2));
    CHECK(lp["neg"] == doctest::Approx(-1.7));
    CHECK(lp["other"] < -3.0);  // below the reported floor
}

TEST_CASE("http backend throws UnsupportedByBackend without logprobs") {
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json out = {
            {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "Yes"}}},
                                                {"finish_reason", "stop"}}})}};
        res.set_content(out.dump(), "application/json");
    });
    HttpBackend backend(test_config(server.base_url()));
    CHECK_THROWS_AS(backend.label_logprobs("p", {{"pos", "Yes"}, {"neg", "No"}}), UnsupportedByBackend);
}

TEST_CASE("http backend retries transient failures") {
    SUBCASE("5xx then success") {
        std::atomic<int> hits{0};
        FakeServer server([&](const httplib::Request&, httplib::Response& res) {
            if (hits++ < 2) {
                res.status = 503;
                res.set_content("overloaded", "text/plain");
                return;
            }
            nlohmann::json out = {
                {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "ok"}}},
                                                    {"finish_reason", "stop"}}})}};
            res.set_content(out.dump(), "application/json");
        });
        HttpBackend backend(test_config(server.base_url()));
        SamplingParams params;
        CHECK(backend.complete("p", params, 0).text == "ok");
        CHECK(hits == 3);
    }
    SUBCASE("persistent 5xx exhausts the budget") {
        std::atomic<int> hits{0};
        FakeServer server([&](const httplib::Request&, httplib::Response& res) {
            hits++;
            res.status = 500;
        });
        HttpBackend backend(test_config(server.base_url()));
        SamplingParams params;
        CHECK_THROWS_AS(backend.complete("p", params, 0), BackendUnavailable);
        CHECK(hits == 3);
    }
    SUBCASE("429 surfaces as RateLimited") {
        FakeServer server([&](const httplib::Request&, httplib::Response& res) { res.status = 429; });
        HttpBackend backend(test_config(server.base_url()));
        SamplingParams params;
        CHECK_THROWS_AS(backend.complete("p", params, 0), RateLimited);
    }
    SUBCASE("non-JSON success body is MalformedResponse") {
        FakeServer server([&](const httplib::Request&, httplib::Response& res) {
            res.set_content("definitely not json", "text/plain");
        });
        HttpBackend backend(test_config(server.base_url()));
        SamplingParams params;
        CHECK_THROWS_AS(backend.complete("p", params, 0), MalformedResponse);
    }
}

TEST_CASE("full experiment runs against an OpenAI-style server with cache and replay") {
    // A stateless fake model: completions answer Yes with a fixed rationale,
    // logprob queries always favor " Yes".
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
        hits++;
        auto body = nlohmann::json::parse(req.body);
        std::string prompt = body["messages"][0]["content"];
        nlohmann::json choice;
        choice["finish_reason"] = "stop";
        if (body.value("logprobs", false)) {
            nlohmann::json top = nlohmann::json::array({
                {{"token", " Yes"}, {"logprob", -0.2}},
                {{"token", " No"}, {"logprob", -1.8}},
            });
            choice["message"] = {{"role", "assistant"}, {"content", " Yes"}};
            choice["logprobs"] = {
                {"content",
                 nlohmann::json::array({{{"token", " Yes"}, {"logprob", -0.2}, {"top_logprobs", top}}})}};
        } else {
            choice["message"] = {{"role", "assistant"},
                                 {"content", " steady server reasoning\nAnswer: Yes"}};
        }
        res.set_content(nlohmann::json{{"choices", nlohmann::json::array({choice})}}.dump(),
                        "application/json");
    });

    test::TempDir tmp;
    auto run_once = [&](std::shared_ptr<Backend> backend) {
        RunDeps deps;
        deps.backend = std::move(backend);
        deps.templates = &test::shared_templates();
        for (int i = 0; i < 6; ++i) {
            DatasetRecord rec;
            rec.id = "train" + std::to_string(i);
            rec.fields["question"] = "train probe " + std::to_string(i);
            rec.label = i % 2 ? "yes" : "no";
            rec.explanation = "train rationale " + std::to_string(i);
            deps.train.push_back(std::move(rec));
        }
        for (int i = 0; i < 3; ++i) {
            DatasetRecord rec;
            rec.id = "live" + std::to_string(i);
            rec.fields["question"] = "live question " + std::to_string(i);
            rec.label = "yes";
            deps.test.push_back(std::move(rec));
        }
        RunConfig cfg;
        cfg.task_id = "demo";
        cfg.method = Method::EASE;
        cfg.k_demos = 6;
        cfg.n_candidates = 3;
        cfg.n_splits = 1;
        cfg.split_size = 3;
        cfg.run_seed = 21;
        cfg.k_exemplars = 2;
        cfg.workers = 3;
        cfg.token_budget = 1000000;
        return run_experiment(cfg, deps);
    };

    auto http = [&] { return std::make_shared<HttpBackend>(test_config(server.base_url())); };
    auto first = run_once(std::make_shared<CachingBackend>(http(), tmp.path() / "cache"));
    CHECK(first.mean_accuracy == doctest::Approx(1.0));
    CHECK(hits.load() > 0);

    int hits_after_first = hits.load();
    auto second = run_once(std::make_shared<CachingBackend>(http(), tmp.path() / "cache"));
    CHECK(hits.load() == hits_after_first);  // fully served from disk
    CHECK(second.canonical.dump() == first.canonical.dump());

    auto replay = run_once(CachingBackend::replay(tmp.path() / "cache", "openai", "test-model"));
    CHECK(replay.canonical.dump() == first.canonical.dump());
}

TEST_CASE("cache tolerates concurrent writers on the same key") {
    test::TempDir tmp;
    ResponseCache cache(tmp.path());
    parallel_for_indexed(64, 8, [&](std::size_t i) {
        // Same key material, identical payload: last write wins harmlessly.
        cache.put("mock", "shared-key", {{"value", 42}});
        (void)i;
    });
    auto hit = cache.get("mock", "shared-key");
    REQUIRE(hit.has_value());
    CHECK((*hit)["value"] == 42);
    // No temp files left behind.
    for (auto it = std::filesystem::recursive_directory_iterator(tmp.path());
         it != std::filesystem::recursive_directory_iterator(); ++it)
        if (it->is_regular_file()) CHECK(it->path().extension() == ".json");
}

TEST_CASE("http backend honors the in-flight bound") {
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --in_flight;
        nlohmann::json out = {
            {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "ok"}}},
                                                {"finish_reason", "stop"}}})}};
        res.set_content(out.dump(), "application/json");
    });
    auto cfg = test_config(server.base_url());
    cfg.max_in_flight = 2;
    HttpBackend backend(cfg);
    SamplingParams params;
    parallel_for_indexed(8, 8, [&](std::size_t i) {
        (void)backend.complete("prompt " + std::to_string(i), params, static_cast<int>(i));
    });
    CHECK(peak.load() <= 2);
    CHECK(backend.request_count() == 8);
}

TEST_CASE("retry policy never duplicates a cached write") {
    // Flaky inner backend: fails twice, then succeeds; the cache must hold
    // exactly one entry afterwards and a rerun must not touch the network.
    test::TempDir tmp;
    std::atomic<int> hits{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        if (hits++ < 2) {
            res.status = 502;
            return;
        }
        nlohmann::json out = {
            {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "ok"}}},
                                                {"finish_reason", "stop"}}})}};
        res.set_content(out.dump(), "application/json");
    });
    auto inner = std::make_shared<HttpBackend>(test_config(server.base_url()));
    CachingBackend cached(inner, tmp.path() / "cache");
    SamplingParams params;
    CHECK(cached.complete("p", params, 0).text == "ok");
    CHECK(hits == 3);
    CHECK(cached.complete("p", params, 0).text == "ok");
    CHECK(hits == 3);  // second call never reached the server

    std::size_t entries = 0;
    for (auto it = std::filesystem::recursive_directory_iterator(tmp.path() / "cache");
         it != std::filesystem::recursive_directory_iterator(); ++it)
        if (it->is_regular_file()) ++entries;
    CHECK(entries == 1);
}
