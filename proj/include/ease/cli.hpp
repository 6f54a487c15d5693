#pragma once

// Command-line front end. Subcommands:
//   bootstrap  mine negative explanations and build the scoring demo set
//   run        run one method over the configured splits
//   compare    run a method matrix and emit a combined CSV
//   replay     re-run entirely from the response cache (no backend calls)
//   judge      win/tie/lose arithmetic over a CSV of rater counts + scores
// Every flag can also come from a key=value config file (--config); flags
// win. Exit codes: 0 ok, 2 config error, 3 backend exhaustion, 4 dataset
// error, 1 anything else.

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ease/harness.hpp"
#include "ease/http_backend.hpp"
#include "ease/mock_backend.hpp"

namespace ease {

struct CliContext {
    std::string task = "demo";
    std::string method = "ease";
    int k = 48;
    int n = 9;
    double temperature = 0.7;
    int splits = 5;
    int split_size = 300;
    std::uint64_t seed = 0;
    std::string backend = "mock";
    std::string cache_dir;
    std::string bootstrap_mode = "ep";
    std::string verbalizers = "v1";
    std::string scorer = "llm";
    std::string template_set = "default";
    bool trace = false;

    std::string train_path;
    std::string test_path;
    std::string templates_dir = "templates";
    std::string out_dir = "runs";
    std::string mock_script;
    int token_budget = 6000;
    int max_tokens = 256;
    int workers = 4;
    int k_exemplars = 8;
    bool drop_malformed = false;

    std::string methods = "icl,pe,ep,self-consistency,ease,ease-no-bls,ease-no-spa";  // compare
    std::string judge_input;                                                          // judge
};

namespace cli_detail {

// key=value config file, one option per line, '#' comments. Keys are the
// long flag names without the dashes. Values set here act as defaults;
// anything given on the command line wins.
inline void apply_config_file(CliContext& ctx, const std::filesystem::path& path) {
    auto as_bool = [](const std::string& v) { return v == "1" || v == "true" || v == "yes" || v == "on"; };
    std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"task", [&](const std::string& v) { ctx.task = v; }},
        {"method", [&](const std::string& v) { ctx.method = v; }},
        {"k", [&](const std::string& v) { ctx.k = std::stoi(v); }},
        {"n", [&](const std::string& v) { ctx.n = std::stoi(v); }},
        {"temperature", [&](const std::string& v) { ctx.temperature = std::stod(v); }},
        {"splits", [&](const std::string& v) { ctx.splits = std::stoi(v); }},
        {"split-size", [&](const std::string& v) { ctx.split_size = std::stoi(v); }},
        {"seed", [&](const std::string& v) { ctx.seed = std::stoull(v); }},
        {"backend", [&](const std::string& v) { ctx.backend = v; }},
        {"cache-dir", [&](const std::string& v) { ctx.cache_dir = v; }},
        {"bootstrap-mode", [&](const std::string& v) { ctx.bootstrap_mode = v; }},
        {"verbalizers", [&](const std::string& v) { ctx.verbalizers = v; }},
        {"scorer", [&](const std::string& v) { ctx.scorer = v; }},
        {"template-set", [&](const std::string& v) { ctx.template_set = v; }},
        {"trace", [&](const std::string& v) { ctx.trace = as_bool(v); }},
        {"train", [&](const std::string& v) { ctx.train_path = v; }},
        {"test", [&](const std::string& v) { ctx.test_path = v; }},
        {"templates", [&](const std::string& v) { ctx.templates_dir = v; }},
        {"out", [&](const std::string& v) { ctx.out_dir = v; }},
        {"mock-script", [&](const std::string& v) { ctx.mock_script = v; }},
        {"token-budget", [&](const std::string& v) { ctx.token_budget = std::stoi(v); }},
        {"max-tokens", [&](const std::string& v) { ctx.max_tokens = std::stoi(v); }},
        {"workers", [&](const std::string& v) { ctx.workers = std::stoi(v); }},
        {"k-exemplars", [&](const std::string& v) { ctx.k_exemplars = std::stoi(v); }},
        {"drop-malformed", [&](const std::string& v) { ctx.drop_malformed = as_bool(v); }},
        {"methods", [&](const std::string& v) { ctx.methods = v; }},
        {"input", [&](const std::string& v) { ctx.judge_input = v; }},
    };
    std::istringstream in(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string_view stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key(trim(stripped.substr(0, eq)));
        std::string value(trim(stripped.substr(eq + 1)));
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": unknown option '" + key + "'");
        try {
            it->second(value);
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
    }
}

inline RunConfig to_run_config(const CliContext& ctx) {
    RunConfig cfg;
    cfg.task_id = ctx.task;
    cfg.method = method_from_string(ctx.method);
    cfg.k_demos = ctx.k;
    cfg.n_candidates = ctx.n;
    cfg.temperature = ctx.temperature;
    cfg.n_splits = ctx.splits;
    cfg.split_size = ctx.split_size;
    cfg.run_seed = ctx.seed;
    cfg.backend_id = ctx.backend;
    cfg.bootstrap_mode = ctx.bootstrap_mode;
    cfg.verbalizers = ctx.verbalizers;
    cfg.scorer = ctx.scorer;
    cfg.template_set = ctx.template_set;
    cfg.token_budget = ctx.token_budget;
    cfg.max_tokens = ctx.max_tokens;
    cfg.workers = ctx.workers;
    cfg.k_exemplars = ctx.k_exemplars;
    cfg.drop_malformed = ctx.drop_malformed;
    return cfg;
}

inline std::string mock_model_id(const CliContext& ctx) {
    if (!ctx.mock_script.empty() && std::filesystem::exists(ctx.mock_script)) {
        try {
            auto j = nlohmann::json::parse(read_file(ctx.mock_script));
            return j.value("model", std::string("scripted"));
        } catch (...) {
        }
    }
    return "scripted";
}

inline std::shared_ptr<Backend> make_backend(const CliContext& ctx, bool replay) {
    if (replay) {
        if (ctx.cache_dir.empty()) throw ConfigError("replay requires --cache-dir");
        std::string model =
            ctx.backend == "mock" ? mock_model_id(ctx) : HttpBackendConfig::from_env().model;
        return CachingBackend::replay(ctx.cache_dir, ctx.backend, model);
    }
    std::shared_ptr<Backend> inner;
    if (ctx.backend == "mock") {
        if (ctx.mock_script.empty()) throw ConfigError("--backend mock requires --mock-script");
        inner = load_mock_script(ctx.mock_script);
    } else if (ctx.backend == "openai") {
        HttpBackendConfig cfg = HttpBackendConfig::from_env();
        cfg.trace = ctx.trace;
        inner = std::make_shared<HttpBackend>(std::move(cfg));
    } else {
        throw ConfigError("unknown backend '" + ctx.backend + "' (expected mock or openai)");
    }
    if (!ctx.cache_dir.empty()) return std::make_shared<CachingBackend>(inner, ctx.cache_dir);
    return inner;
}

inline std::filesystem::path bootstrap_path(const CliContext& ctx) {
    return std::filesystem::path(ctx.out_dir) / "bootstrap" / ctx.task /
           (std::to_string(ctx.seed) + ".jsonl");
}

inline RunDeps make_deps(const CliContext& ctx, const TaskSpec& task, const TemplateLibrary& templates,
                         std::shared_ptr<Backend> backend) {
    RunDeps deps;
    deps.backend = std::move(backend);
    deps.templates = &templates;
    deps.task = task;
    if (!ctx.train_path.empty()) {
        auto train = load_dataset(ctx.train_path, task);
        deps.train = std::move(train.records);
        deps.dropped_records += train.dropped;
    }
    if (!ctx.test_path.empty()) {
        auto test = load_dataset(ctx.test_path, task);
        deps.test = std::move(test.records);
        deps.dropped_records += test.dropped;
    }
    auto bpath = bootstrap_path(ctx);
    if (auto data = load_bootstrap(bpath)) deps.bootstrap = std::move(*data);
    deps.bootstrap_save_path = bpath;
    return deps;
}

inline std::filesystem::path run_out_dir(const CliContext& ctx, const std::string& method) {
    return std::filesystem::path(ctx.out_dir) / (ctx.task + "_" + method + "_seed" + std::to_string(ctx.seed));
}

inline int run_one(const CliContext& ctx, bool replay) {
    if (ctx.train_path.empty() || ctx.test_path.empty())
        throw ConfigError("run: --train and --test dataset paths are required");
    RunConfig cfg = to_run_config(ctx);
    TaskSpec task = builtin_task(ctx.task);
    TemplateLibrary templates{ctx.templates_dir};
    RunDeps deps = make_deps(ctx, task, templates, make_backend(ctx, replay));
    RunReport report = run_experiment(cfg, deps);
    auto out = run_out_dir(ctx, to_string(cfg.method));
    write_report(report, cfg, out);
    std::cout << ctx.task << " " << to_string(cfg.method) << " mean_accuracy=" << report.mean_accuracy
              << " failures=" << report.failures << " backend_requests=" << report.backend_requests
              << " -> " << (out / "report.json").string() << "\n";
    return 0;
}

inline int bootstrap_cmd(const CliContext& ctx) {
    RunConfig cfg = to_run_config(ctx);
    TaskSpec task = builtin_task(ctx.task);
    task.template_set_id = ctx.template_set;
    task.validate();
    TemplateLibrary templates{ctx.templates_dir};
    auto backend = make_backend(ctx, false);

    auto train = load_dataset(ctx.train_path, task);
    std::vector<Demonstration> pool;
    for (const auto& rec : train.records) {
        if (rec.explanation.empty()) continue;
        pool.push_back({rec.input(), rec.explanation, rec.label});
    }
    seeded_shuffle(pool, derive_seed(cfg.run_seed, "demos"));
    if (pool.size() > static_cast<std::size_t>(cfg.k_demos))
        pool.resize(static_cast<std::size_t>(cfg.k_demos));

    PromptLimits limits;
    limits.max_demos = static_cast<std::size_t>(cfg.k_demos);
    limits.token_budget = static_cast<std::size_t>(cfg.token_budget);
    Backend& b = *backend;
    limits.counter = [&b](std::string_view s) { return b.count_tokens(s); };
    Prompter prompter(templates, task, limits);

    BootstrapConfig bc;
    bc.k_exemplars = cfg.k_exemplars;
    bc.n_mine = cfg.n_candidates;
    bc.temperature = cfg.temperature;
    bc.seed = derive_seed(cfg.run_seed, "bootstrap");
    bc.mode = cfg.bootstrap_mode == "pe" ? PromptMode::PE : PromptMode::EP;
    bc.max_tokens = cfg.max_tokens;
    bc.workers = cfg.workers;

    NegativesMap negatives = mine_negatives(pool, bc, *backend, prompter);
    std::size_t with_negatives = 0;
    for (const auto& [id, negs] : negatives)
        if (!negs.empty()) ++with_negatives;
    ScoringDemoSet demos;
    try {
        demos = build_scoring_demos(pool, negatives, bc.seed);
    } catch (const EmptyDemoSet&) {
        std::cerr << "warning: no instance produced negatives; scorer will run zero-shot\n";
    }
    auto path = bootstrap_path(ctx);
    save_bootstrap(path, {negatives, demos});
    std::cout << "bootstrap " << ctx.task << ": " << with_negatives << "/" << negatives.size()
              << " instances contributed, " << demos.items.size() << " scoring demos -> " << path.string()
              << "\n";
    return 0;
}

inline int compare_cmd(const CliContext& ctx) {
    std::vector<std::string> methods;
    std::stringstream ss(ctx.methods);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) methods.emplace_back(trim(item));
    if (methods.empty()) throw ConfigError("compare: --methods is empty");
    for (const auto& method : methods) (void)method_from_string(method);  // validate before any run

    TaskSpec task = builtin_task(ctx.task);
    TemplateLibrary templates{ctx.templates_dir};

    std::ostringstream csv;
    csv << "task,method";
    for (int i = 1; i <= ctx.splits; ++i) csv << ",split" << i;
    csv << ",mean,inconsistency,failures\n";
    csv.setf(std::ios::fixed);
    csv.precision(4);

    for (const auto& method : methods) {
        CliContext one = ctx;
        one.method = method;
        RunConfig cfg = to_run_config(one);
        // Fresh backend per method so mock scripts replay identically.
        RunDeps deps = make_deps(one, task, templates, make_backend(one, false));
        RunReport report = run_experiment(cfg, deps);
        write_report(report, cfg, run_out_dir(one, to_string(cfg.method)));
        csv << ctx.task << "," << to_string(cfg.method);
        for (double a : report.split_accuracies) csv << "," << a;
        csv << "," << report.mean_accuracy << ",";
        if (report.inconsistency) csv << *report.inconsistency;
        csv << "," << report.failures << "\n";
        std::cout << ctx.task << " " << to_string(cfg.method) << " mean_accuracy=" << report.mean_accuracy
                  << "\n";
    }
    auto path = std::filesystem::path(ctx.out_dir) / (ctx.task + "_compare.csv");
    write_file_atomic(path, csv.str());
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

// Input CSV columns: c1,c2,s1,s2 (header row optional).
inline int judge_cmd(const CliContext& ctx) {
    if (ctx.judge_input.empty()) throw ConfigError("judge: --input CSV path required");
    std::istringstream in(read_file(ctx.judge_input));
    std::string line;
    int line_no = 0, wins = 0, ties = 0, losses = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::stringstream row(line);
        std::string col;
        while (std::getline(row, col, ',')) cols.emplace_back(trim(col));
        if (cols.size() != 4)
            throw SchemaError(ctx.judge_input + ":" + std::to_string(line_no) + ": expected 4 columns");
        if (line_no == 1 && !std::isdigit(static_cast<unsigned char>(cols[0].empty() ? ' ' : cols[0][0])))
            continue;  // header row
        int c1, c2;
        double s1, s2;
        try {
            c1 = std::stoi(cols[0]);
            c2 = std::stoi(cols[1]);
            s1 = std::stod(cols[2]);
            s2 = std::stod(cols[3]);
        } catch (const std::exception&) {
            throw SchemaError(ctx.judge_input + ":" + std::to_string(line_no) + ": non-numeric column");
        }
        Judgement j = human_judge(c1, c2, s1, s2);
        if (j == Judgement::Win) ++wins;
        else if (j == Judgement::Tie) ++ties;
        else ++losses;
        std::cout << to_string(j) << "\n";
    }
    std::cout << "win=" << wins << " tie=" << ties << " lose=" << losses << "\n";
    return 0;
}

}  // namespace cli_detail

inline int cli_main(std::vector<std::string> args) {
    CLI::App app{"Explanation-aware soft ensemble engine"};
    app.require_subcommand(1);

    CliContext ctx;
    std::string config_help_sink;  // real handling happens in the pre-scan below
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_help_sink, "key=value config file mirroring the flags; flags win");
        cmd->add_option("--task", ctx.task, "task id (esnli, anli_r1/2/3, ecqa, openbookqa, strategyqa, demo)");
        cmd->add_option("--method", ctx.method, "prediction method");
        cmd->add_option("--k", ctx.k, "demonstration count");
        cmd->add_option("--n", ctx.n, "candidates per instance");
        cmd->add_option("--temperature", ctx.temperature, "sampling temperature");
        cmd->add_option("--splits", ctx.splits, "number of test splits");
        cmd->add_option("--split-size", ctx.split_size, "instances per split");
        cmd->add_option("--seed", ctx.seed, "run seed");
        cmd->add_option("--backend", ctx.backend, "backend id (mock|openai)");
        cmd->add_option("--cache-dir", ctx.cache_dir, "response cache directory");
        cmd->add_option("--bootstrap-mode", ctx.bootstrap_mode, "negative mining pipeline (ep|pe)")
            ->check(CLI::IsMember({"ep", "pe"}));
        cmd->add_option("--verbalizers", ctx.verbalizers, "scorer verbalizer preset (v1|v2|v3)")
            ->check(CLI::IsMember({"v1", "v2", "v3"}));
        cmd->add_option("--scorer", ctx.scorer, "explanation weight source (llm|lexical)")
            ->check(CLI::IsMember({"llm", "lexical"}));
        cmd->add_flag("--trace", ctx.trace, "log request/response JSON verbatim");
        cmd->add_option("--train", ctx.train_path, "train JSONL path");
        cmd->add_option("--test", ctx.test_path, "test JSONL path");
        cmd->add_option("--templates", ctx.templates_dir, "template directory");
        cmd->add_option("--template-set", ctx.template_set, "template variant set");
        cmd->add_option("--out", ctx.out_dir, "output directory");
        cmd->add_option("--mock-script", ctx.mock_script, "mock backend script (JSON)");
        cmd->add_option("--token-budget", ctx.token_budget, "prompt token budget");
        cmd->add_option("--max-tokens", ctx.max_tokens, "completion token limit");
        cmd->add_option("--workers", ctx.workers, "instance-level worker threads");
        cmd->add_option("--k-exemplars", ctx.k_exemplars, "exemplars per mining prompt");
        cmd->add_flag("--drop-malformed", ctx.drop_malformed, "drop unparseable candidates before voting");
    };

    CLI::App* cmd_bootstrap = app.add_subcommand("bootstrap", "mine negatives and build the scoring demo set");
    add_common(cmd_bootstrap);
    CLI::App* cmd_run = app.add_subcommand("run", "run one method");
    add_common(cmd_run);
    CLI::App* cmd_compare = app.add_subcommand("compare", "run a method matrix");
    add_common(cmd_compare);
    cmd_compare->add_option("--methods", ctx.methods, "comma-separated method list");
    CLI::App* cmd_replay = app.add_subcommand("replay", "re-run from cache only");
    add_common(cmd_replay);
    CLI::App* cmd_judge = app.add_subcommand("judge", "win/tie/lose over a rater CSV");
    cmd_judge->add_option("--config", config_help_sink, "key=value config file mirroring the flags");
    cmd_judge->add_option("--input", ctx.judge_input, "CSV with columns c1,c2,s1,s2");

    // Config files apply before flag parsing, so flags win.
    try {
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                cli_detail::apply_config_file(ctx, args[i + 1]);
            } else if (args[i].rfind("--config=", 0) == 0) {
                cli_detail::apply_config_file(ctx, args[i].substr(9));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    // CLI11 wants argv-style reversed input.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_bootstrap->parsed()) return cli_detail::bootstrap_cmd(ctx);
        if (cmd_run->parsed()) return cli_detail::run_one(ctx, false);
        if (cmd_compare->parsed()) return cli_detail::compare_cmd(ctx);
        if (cmd_replay->parsed()) return cli_detail::run_one(ctx, true);
        if (cmd_judge->parsed()) return cli_detail::judge_cmd(ctx);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const BackendUnavailable& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const RateLimited& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const ScriptExhausted& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const SchemaError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 4;
    } catch (const UnknownLabel& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ease
