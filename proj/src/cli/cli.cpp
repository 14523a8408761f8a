#include "grraf/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "grraf/bench.hpp"
#include "grraf/errors.hpp"
#include "grraf/graph_io.hpp"
#include "grraf/pipeline.hpp"

namespace grraf::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed JSON in " + path.string() + ": " + e.what(), 0, 0);
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigurationError("cannot write " + path.string());
    out << text;
}

std::chrono::nanoseconds seconds_to_ns(double seconds) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(seconds));
}

TaskKind task_or_usage(const std::string& name) {
    auto task = parse_task(name);
    if (!task) throw UsageError("unknown task '" + name + "'");
    return *task;
}

/// Flags shared by every subcommand that runs the pipeline.
struct PipelineFlags {
    std::string backend = "embedded";
    double t = 300;
    int n = 3;
    std::string templates;

    void attach(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "Executor backend: embedded or external")
            ->check(CLI::IsMember({"embedded", "external"}));
        cmd->add_option("--t", t, "Execution time limit in seconds")->check(CLI::PositiveNumber);
        cmd->add_option("--n", n, "Maximum repairs after the first attempt")->check(CLI::NonNegativeNumber);
        cmd->add_option("--templates", templates, "JSON file overriding prompt templates");
    }

    PipelineConfig build() const {
        PipelineConfig config;
        config.time_limit = seconds_to_ns(t);
        config.max_iterations = n;
        config.executor.backend = parse_backend(backend);
        if (config.executor.backend == Backend::external) {
            config.executor.runtime = ExternalRuntime::from_environment();
            if (config.executor.runtime.command.empty())
                throw ConfigurationError("the external backend needs GRRAF_SHIM set to the runtime command");
        }
        config.templates = PromptTemplates::defaults(config.executor.backend);
        if (!templates.empty()) config.templates = PromptTemplates::load(templates, config.templates);
        config.validate();
        return config;
    }
};

/// Flags that select or generate datasets.
struct DataFlags {
    std::vector<std::string> tasks;
    bool all_tasks = false;
    std::vector<std::string> data_dirs;
    std::optional<std::size_t> min_nodes;
    std::optional<std::size_t> max_nodes;
    std::optional<std::size_t> count;
    std::optional<double> min_density;
    std::optional<double> max_density;
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd, bool with_data_dirs) {
        cmd->add_option("--task", tasks, "Task to generate (repeatable)");
        cmd->add_flag("--all-tasks", all_tasks, "Generate every task");
        if (with_data_dirs) cmd->add_option("--data", data_dirs, "Dataset directory written by gen (repeatable)");
        cmd->add_option("--min", min_nodes, "Smallest graph size");
        cmd->add_option("--max", max_nodes, "Largest graph size");
        cmd->add_option("--count", count, "Instances per task");
        cmd->add_option("--min-density", min_density, "Lowest edge density");
        cmd->add_option("--max-density", max_density, "Highest edge density");
        cmd->add_option("--seed", seed, "Generation seed");
    }

    std::vector<bench::DatasetSpec> specs() const {
        std::vector<TaskKind> kinds;
        if (all_tasks) kinds.assign(kAllTasks.begin(), kAllTasks.end());
        for (const auto& name : tasks) {
            auto task = task_or_usage(name);
            if (std::find(kinds.begin(), kinds.end(), task) == kinds.end()) kinds.push_back(task);
        }
        std::vector<bench::DatasetSpec> out;
        for (TaskKind task : kinds) {
            auto spec = bench::DatasetSpec::defaults(task);
            if (min_nodes) spec.min_nodes = *min_nodes;
            if (max_nodes) spec.max_nodes = *max_nodes;
            if (count) spec.count = *count;
            if (min_density) spec.min_density = *min_density;
            if (max_density) spec.max_density = *max_density;
            spec.seed = seed;
            out.push_back(spec);
        }
        return out;
    }

    std::vector<bench::Dataset> load_or_generate() const {
        std::vector<bench::Dataset> datasets;
        for (const auto& dir : data_dirs) {
            if (std::filesystem::exists(std::filesystem::path(dir) / "manifest.json")) {
                datasets.push_back(bench::load_dataset(dir));
                continue;
            }
            if (!std::filesystem::is_directory(dir)) throw ConfigurationError("dataset not found: " + dir);
            std::vector<std::filesystem::path> subdirs;
            for (const auto& entry : std::filesystem::directory_iterator(dir))
                if (std::filesystem::exists(entry.path() / "manifest.json")) subdirs.push_back(entry.path());
            if (subdirs.empty()) throw ConfigurationError("no dataset manifest under " + dir);
            std::sort(subdirs.begin(), subdirs.end());
            for (const auto& sub : subdirs) datasets.push_back(bench::load_dataset(sub));
        }
        for (const auto& spec : specs()) datasets.push_back(bench::gen_dataset(spec));
        if (datasets.empty()) throw UsageError("no datasets: pass --task, --all-tasks or --data");
        return datasets;
    }
};

struct LlmFlags {
    std::string spec;
    bool golden = false;
    std::int64_t busy_steps = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--llm", spec, "scripted:FILE, live, live:CONFIG.json or golden");
        cmd->add_flag("--golden", golden, "Answer with the shipped golden programs");
        cmd->add_option("--busy-steps", busy_steps, "Golden mode: extra interpreter steps per program")
            ->check(CLI::NonNegativeNumber);
    }

    bool is_golden() const { return golden || spec == "golden"; }

    std::shared_ptr<llm::LlmClient> build(const std::vector<bench::Dataset>& datasets,
                                          const std::string& override_spec = "") const {
        const std::string& chosen = override_spec.empty() ? spec : override_spec;
        if ((override_spec.empty() && is_golden()) || chosen == "golden") {
            auto llm = bench::GoldenLlm::for_datasets(datasets);
            llm->set_busy_iterations(busy_steps);
            return llm;
        }
        if (chosen.empty()) throw UsageError("choose a model with --llm or --golden");
        return make_llm(chosen);
    }
};

int cmd_ask(const std::string& graph_path, const std::string& question, const std::string& task_name_flag,
            const std::string& id, const PipelineFlags& pflags, const std::string& llm_spec,
            const std::string& record_path, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::is_regular_file(graph_path)) {
        err << "graph file not found: " << graph_path << "\n";
        return kExitConfig;
    }
    if (llm_spec == "golden") throw UsageError("golden mode is only available for bench and sweep");
    QuestionSpec q;
    q.id = id;
    q.prompt = question;
    q.graph_ref = "G";
    if (!task_name_flag.empty()) q.task_hint = task_or_usage(task_name_flag);

    auto config = pflags.build();
    auto llm = make_llm(llm_spec);
    auto store = std::make_shared<GraphStore>();
    store->add_file(q.graph_ref, graph_path);

    Pipeline pipeline(llm, config, store);
    AnswerRecord record = pipeline.run(q);
    if (!record_path.empty()) write_text_file(record_path, record_to_json(record).dump(2) + "\n");
    if (!record.error.empty()) {
        err << "the model could not be reached: " << record.error << "\n";
        return kExitPartial;
    }
    out << record.naturalized << "\n";
    return kExitOk;
}

std::string sweep_csv(const std::vector<bench::SweepPoint>& points) {
    std::ostringstream out;
    out << "value,total,correct,accuracy,fallback_fraction,mean_wall_ms\n";
    for (const auto& p : points)
        out << p.value << ',' << p.total << ',' << p.correct << ',' << p.accuracy << ',' << p.fallback_fraction
            << ',' << p.mean_wall_ms << '\n';
    return out.str();
}

std::string token_csv(const std::vector<bench::TokenRow>& rows) {
    std::ostringstream out;
    out << "size,questions,mean_input_tokens,mean_output_tokens\n";
    for (const auto& r : rows)
        out << r.size << ',' << r.questions << ',' << r.mean_input_tokens << ',' << r.mean_output_tokens << '\n';
    return out.str();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Answer graph questions with generated programs run against a stored graph."};
    app.name(args.empty() ? "grraf" : std::filesystem::path(args[0]).filename().string());
    app.require_subcommand(1);

    // ask
    auto* ask = app.add_subcommand("ask", "Answer one question about a graph file");
    std::string ask_graph, ask_question, ask_task, ask_id = "ask", ask_llm = "live", ask_record;
    PipelineFlags ask_flags;
    ask->add_option("--graph", ask_graph, "Graph file (canonical JSON or edge-list text)")->required();
    ask->add_option("--question", ask_question, "The question")->required();
    ask->add_option("--task", ask_task, "Expected task, enables answer-shape checks");
    ask->add_option("--id", ask_id, "Question id (keys scripted responses)");
    ask->add_option("--llm", ask_llm, "scripted:FILE, live or live:CONFIG.json");
    ask->add_option("--record", ask_record, "Write the full answer record as JSON");
    ask_flags.attach(ask);

    // convert
    auto* convert = app.add_subcommand("convert", "Convert a graph file between dialects");
    std::string conv_in, conv_out, conv_to = "json";
    convert->add_option("--in", conv_in, "Input graph file")->required();
    convert->add_option("--out", conv_out, "Output file")->required();
    convert->add_option("--to", conv_to, "Target dialect: json or text");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate benchmark datasets");
    DataFlags gen_data;
    std::string gen_out = "data";
    gen_data.attach(gen, false);
    gen->add_option("--out", gen_out, "Output directory (one subdirectory per task)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark");
    DataFlags bench_data;
    PipelineFlags bench_flags;
    LlmFlags bench_llm;
    std::size_t bench_parallel = 1;
    std::string bench_out, bench_csv;
    bool bench_no_records = false;
    bench_data.attach(bench_cmd, true);
    bench_flags.attach(bench_cmd);
    bench_llm.attach(bench_cmd);
    bench_cmd->add_option("--parallel", bench_parallel, "Worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", bench_out, "Write the JSON report here");
    bench_cmd->add_option("--csv", bench_csv, "Write per-question CSV rows here");
    bench_cmd->add_flag("--no-records", bench_no_records, "Leave full answer records out of the report");

    // report
    auto* report = app.add_subcommand("report", "Print a saved benchmark report");
    std::vector<std::string> report_in;
    std::string report_format = "table";
    report->add_option("--in", report_in, "Report JSON (repeatable for tokens)")->required();
    report->add_option("--format", report_format, "table, csv, json or tokens")
        ->check(CLI::IsMember({"table", "csv", "json", "tokens"}));

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the benchmark once per parameter value");
    DataFlags sweep_data;
    PipelineFlags sweep_flags;
    LlmFlags sweep_llm;
    std::string sweep_param, sweep_out;
    std::vector<std::string> sweep_values;
    std::size_t sweep_parallel = 1;
    sweep_data.attach(sweep_cmd, true);
    sweep_flags.attach(sweep_cmd);
    sweep_llm.attach(sweep_cmd);
    sweep_cmd->add_option("--param", sweep_param, "t, n or backbone")->required();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');
    sweep_cmd->add_option("--parallel", sweep_parallel, "Worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "Write the sweep as JSON here");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (ask->parsed())
        return cmd_ask(ask_graph, ask_question, ask_task, ask_id, ask_flags, ask_llm, ask_record, out, err);

    if (convert->parsed()) {
        if (!std::filesystem::is_regular_file(conv_in)) {
            err << "graph file not found: " << conv_in << "\n";
            return kExitConfig;
        }
        Dialect dialect;
        try {
            dialect = parse_dialect(conv_to);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        save_graph_file(load_graph_file(conv_in), conv_out, dialect);
        return kExitOk;
    }

    if (gen->parsed()) {
        auto specs = gen_data.specs();
        if (specs.empty()) throw UsageError("gen needs --task or --all-tasks");
        for (const auto& spec : specs) {
            auto dataset = bench::gen_dataset(spec);
            const auto dir = std::filesystem::path(gen_out) / std::string(task_name(spec.task));
            bench::save_dataset(dataset, dir);
            out << task_name(spec.task) << ": " << dataset.instances.size() << " instances in " << dir.string()
                << "\n";
        }
        return kExitOk;
    }

    if (bench_cmd->parsed()) {
        auto config = bench_flags.build();
        auto datasets = bench_data.load_or_generate();
        auto llm = bench_llm.build(datasets);
        bench::BenchOptions options;
        options.parallelism = bench_parallel;
        options.keep_records = !bench_no_records;
        auto result = bench::run_benchmark(datasets, config, llm, options);
        if (!bench_out.empty()) write_text_file(bench_out, bench::report_to_json(result).dump(1) + "\n");
        if (!bench_csv.empty()) write_text_file(bench_csv, bench::report_to_csv(result));
        out << bench::summary_table(result);
        for (const auto& e : result.errors) err << e << "\n";
        return result.errors.empty() ? kExitOk : kExitPartial;
    }

    if (report->parsed()) {
        std::vector<bench::BenchReport> reports;
        for (const auto& path : report_in) {
            if (!std::filesystem::is_regular_file(path)) throw ConfigurationError("report not found: " + path);
            try {
                reports.push_back(bench::report_from_json(read_json_file(path)));
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("malformed report " + path + ": " + e.what(), 0, 0);
            }
        }
        if (report_format == "tokens") {
            out << token_csv(bench::token_curve(reports));
            return kExitOk;
        }
        if (reports.size() != 1) throw UsageError("--format " + report_format + " takes exactly one --in");
        if (report_format == "csv") out << bench::report_to_csv(reports[0]);
        if (report_format == "json") out << bench::report_to_json(reports[0]).dump(1) << "\n";
        if (report_format == "table") out << bench::summary_table(reports[0]);
        return kExitOk;
    }

    if (sweep_cmd->parsed()) {
        bench::SweepParam param;
        try {
            param = bench::parse_sweep_param(sweep_param);
        } catch (const ConfigurationError& e) {
            throw UsageError(e.what());
        }
        auto config = sweep_flags.build();
        auto datasets = sweep_data.load_or_generate();
        bench::LlmFactory factory = [&](const std::string& backbone) { return sweep_llm.build(datasets, backbone); };
        if (param != bench::SweepParam::backbone) sweep_llm.build(datasets);  // fail fast on a bad --llm
        bench::BenchOptions options;
        options.parallelism = sweep_parallel;
        auto points = bench::sweep(param, sweep_values, datasets, config, factory, options);
        if (!sweep_out.empty()) write_text_file(sweep_out, bench::sweep_to_json(param, points).dump(1) + "\n");
        out << sweep_csv(points);
        return kExitOk;
    }
    return kExitUsage;
}

}  // namespace

std::shared_ptr<llm::LlmClient> make_llm(const std::string& spec) {
    if (spec.rfind("scripted:", 0) == 0) {
        const std::string path = spec.substr(9);
        if (!std::filesystem::is_regular_file(path)) throw ConfigurationError("script file not found: " + path);
        return llm::ScriptedLlm::from_json(read_json_file(path));
    }
    if (spec == "live") return std::make_shared<llm::HttpLlm>(llm::HttpLlmConfig::from_environment());
    if (spec.rfind("live:", 0) == 0) {
        const std::string path = spec.substr(5);
        if (!std::filesystem::is_regular_file(path)) throw ConfigurationError("model config not found: " + path);
        return std::make_shared<llm::HttpLlm>(llm::HttpLlmConfig::from_file(path));
    }
    throw UsageError("unknown --llm '" + spec + "' (expected scripted:FILE, live or live:CONFIG.json)");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bench::GenerationError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const llm::ScriptExhausted& e) {
        err << "error: " << e.what() << "\n";
        return kExitPartial;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitPartial;
    }
}

}  // namespace grraf::cli
