#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "opensoc/backend.hpp"
#include "opensoc/dataset.hpp"
#include "opensoc/evaluation.hpp"
#include "opensoc/extraction.hpp"
#include "opensoc/fields.hpp"
#include "opensoc/logparse.hpp"
#include "opensoc/prompting.hpp"
#include "opensoc/service.hpp"

namespace opensoc::cli {

namespace {

using ojson = nlohmann::ordered_json;

/// Failure carrying the exit code it maps to.
struct Exit {
    int code;
    std::string message;
};

struct BackendFlags {
    std::optional<std::string> kind;  // inferred from --replay/--backend-url when unset
    std::optional<std::string> url;
    std::optional<std::string> model;
    std::optional<std::string> replay;
    std::optional<std::string> rules;
    int timeout_ms = 60'000;
    int retries = 2;

    void attach(CLI::App& cmd) {
        cmd.add_option("--backend", kind, "signature, remote or replay")
            ->check(CLI::IsMember({"signature", "remote", "replay"}, CLI::ignore_case));
        cmd.add_option("--backend-url", url,
                       "chat-completions base URL (default: $OPENSOC_BACKEND_URL)");
        cmd.add_option("--model", model, "model name sent to the remote endpoint");
        cmd.add_option("--replay", replay, "recording file {prompt_sha256: text}");
        cmd.add_option("--rules", rules, "JSON rule table for the signature backend");
        cmd.add_option("--timeout-ms", timeout_ms, "remote request timeout")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--retries", retries, "extra attempts after a failed call")
            ->check(CLI::NonNegativeNumber);
    }

    BackendConfig config() const {
        BackendConfig c;
        if (kind)
            c.kind = parse_backend_kind(*kind);
        else if (replay)
            c.kind = BackendKind::Replay;
        else if (url)
            c.kind = BackendKind::Remote;
        c.endpoint_url = url;
        c.model_name = model;
        c.replay_path = replay;
        c.timeout = std::chrono::milliseconds(timeout_ms);
        c.retries = retries;
        return with_environment(c);
    }

    RuleTable rule_table() const {
        if (!rules) return builtin_rule_table();
        try {
            return load_rule_table(*rules);
        } catch (const Error& e) {
            throw Exit{kExitInputData, std::string("cannot load rules: ") + e.what()};
        }
    }

    std::shared_ptr<Backend> make() const {
        BackendConfig c;
        try {
            c = config();
            if (c.kind == BackendKind::Signature) return std::make_shared<SignatureBackend>(rule_table());
            return std::shared_ptr<Backend>(make_backend(c));
        } catch (const Exit&) {
            throw;
        } catch (const InvalidValue& e) {
            throw Exit{kExitOperational, std::string("backend configuration: ") + e.what()};
        } catch (const BackendError& e) {
            throw Exit{kExitOperational, std::string(e.kind()) + ": " + e.what()};
        }
    }
};

std::string read_input_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Exit{kExitInputData, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ParsedStream read_entries(const std::string& path) {
    const auto format = input_format_for(path).value_or(InputFormat::Lines);
    return parse_text(read_input_file(path), format);
}

void print_text(std::ostream& out, const ExtractionResult& r) {
    if (r.empty()) {
        out << "(no labeled fields in backend output)\n" << r.raw << '\n';
        return;
    }
    const auto f = fields_to_json(r);
    std::size_t i = 0;
    for (const auto& [key, value] : f.items()) {
        out << kOutputLabels[i++] << ": ";
        if (value.is_null())
            out << "(missing)";
        else if (value.is_string())
            out << value.get<std::string>();
        else
            out << value.dump();
        out << '\n';
    }
}

void ensure_reachable(const Backend& b) {
    if (!b.reachable())
        throw Exit{kExitOperational, "backend '" + b.name() + "' is unreachable"};
}

// ------------------------------------------------------------------ analyze

struct AnalyzeArgs {
    std::optional<std::string> log;
    std::optional<std::string> file;
    std::string format = "text";
    BackendFlags backend;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<std::string> lines;
    if (a.file) {
        if (a.log) throw Exit{kExitOperational, "give either a log line or --file, not both"};
        auto parsed = read_entries(*a.file);
        for (const auto& d : parsed.diagnostics) err << *a.file << ":" << d.line_number << ": " << d.note << '\n';
        for (auto& e : parsed.entries) lines.push_back(std::move(e.raw));
        if (lines.empty()) throw Exit{kExitInputData, *a.file + " contains no log lines"};
    } else {
        if (!a.log || trim(*a.log).empty()) throw Exit{kExitOperational, "empty log line"};
        lines.emplace_back(trim(*a.log));
    }

    auto backend = a.backend.make();
    ensure_reachable(*backend);
    if (a.format == "csv") out << kCsvHeader << '\n';
    for (std::size_t i = 0; i < lines.size(); ++i) {
        BackendResponse resp;
        try {
            resp = backend->analyze(build_prompt(lines[i]));
        } catch (const BackendError& e) {
            throw Exit{kExitOperational, std::string(e.kind()) + ": " + e.what()};
        }
        const auto r = extract_fields(resp.raw_text);
        if (a.format == "json") {
            out << ojson{{"raw_log", lines[i]}, {"fields", fields_to_json(r)}, {"raw_output", resp.raw_text}}
                       .dump(-1, ' ', false, ojson::error_handler_t::replace)
                << '\n';
        } else if (a.format == "csv") {
            out << csv_row(lines[i], r) << '\n';
        } else {
            if (i) out << '\n';
            if (lines.size() > 1) out << "# " << lines[i] << '\n';
            print_text(out, r);
        }
    }
    return kExitOk;
}

// -------------------------------------------------------------------- batch

struct BatchArgs {
    std::string file;
    std::string format = "csv";
    std::optional<std::string> out;
    std::size_t parallelism = 4;
    BackendFlags backend;
};

int cmd_batch(const BatchArgs& a, std::ostream& out, std::ostream& err) {
    if (a.format == "text") throw Exit{kExitOperational, "batch supports --format csv or json"};
    auto parsed = read_entries(a.file);
    if (parsed.entries.empty()) throw Exit{kExitInputData, a.file + " contains no log lines"};
    auto backend = a.backend.make();
    ensure_reachable(*backend);

    const std::size_t n = parsed.entries.size();
    std::vector<std::optional<BackendResponse>> responses(n);
    std::vector<std::pair<std::string, std::string>> errors(n);  // kind, message
    const auto start = std::chrono::steady_clock::now();
    run_parallel(n, a.parallelism, [&](std::size_t i) {
        try {
            responses[i] = backend->analyze(build_prompt(parsed.entries[i].raw));
        } catch (const Error& e) {
            errors[i] = {e.kind(), e.what()};
        }
        return true;
    });
    const auto wall = std::chrono::steady_clock::now() - start;

    std::ostringstream body;
    if (a.format == "csv") body << kCsvHeader << '\n';
    std::vector<std::chrono::nanoseconds> latencies;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& raw = parsed.entries[i].raw;
        if (responses[i]) {
            latencies.push_back(responses[i]->latency);
            const auto r = extract_fields(responses[i]->raw_text);
            if (a.format == "csv")
                body << csv_row(raw, r) << '\n';
            else
                body << ojson{{"raw_log", raw}, {"fields", fields_to_json(r)},
                              {"raw_output", responses[i]->raw_text}}
                            .dump(-1, ' ', false, ojson::error_handler_t::replace)
                     << '\n';
        } else {
            const auto& [kind, msg] = errors[i];
            if (a.format == "csv")
                body << csv_error_row(raw, kind, msg) << '\n';
            else
                body << ojson{{"raw_log", raw}, {"fields", nullptr},
                              {"error", {{"kind", kind}, {"message", msg}}}}
                            .dump(-1, ' ', false, ojson::error_handler_t::replace)
                     << '\n';
        }
    }

    if (a.out) {
        std::ofstream f(*a.out, std::ios::binary | std::ios::trunc);
        if (!f || !(f << body.str())) throw Exit{kExitOperational, "cannot write " + *a.out};
    } else {
        out << body.str();
    }

    const std::size_t failed = n - latencies.size();
    err << "processed " << n << " entries";
    if (failed) err << " (" << failed << " backend errors)";
    if (!latencies.empty() && wall.count() > 0) {
        const auto t = throughput_meter(latencies, wall);
        char buf[128];
        std::snprintf(buf, sizeof buf, "; %.1f entries/min, mean latency %.3f s", t.entries_per_minute,
                      t.mean_latency_seconds);
        err << buf;
    }
    err << '\n';
    return kExitOk;
}

// -------------------------------------------------------------- gen-dataset

struct GenArgs {
    int train = 450;
    int eval = 50;
    std::uint64_t seed = 42;
    std::string out = "data";
    std::optional<std::string> rules;
};

int cmd_gen_dataset(const GenArgs& a, std::ostream& out, std::ostream&) {
    CategoryCounts counts = reference_counts();
    DatasetSplit split;
    try {
        if (a.train != 450 || a.eval != 50) counts = scaled_counts(a.train, a.eval);
        BackendFlags flags;
        flags.rules = a.rules;
        split = generate_dataset(a.seed, counts, TemplateLibrary::standard(), flags.rule_table());
        save_split(a.out, split);
    } catch (const UnsatisfiableCounts& e) {
        throw Exit{kExitOperational, e.what()};
    } catch (const IoFailure& e) {
        throw Exit{kExitOperational, e.what()};
    }

    const auto tally = count_by_slot(split.train, split.eval);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-30s %6s %6s\n", "Category", "Train", "Eval");
    out << buf;
    int train = 0, eval = 0;
    for (auto c : kAllCategories) {
        const auto& t = tally[index_of(c)];
        if (t.train == 0 && t.eval == 0) continue;
        std::snprintf(buf, sizeof buf, "%-30s %6d %6d\n", std::string(display_name(c)).c_str(), t.train, t.eval);
        out << buf;
        train += t.train;
        eval += t.eval;
    }
    std::snprintf(buf, sizeof buf, "%-30s %6d %6d\n", "Total", train, eval);
    out << buf;
    return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
    std::string dataset;
    std::string out = "eval_results.json";
    std::optional<std::string> csv;
    std::string format = "text";
    std::size_t concurrency = 1;
    BackendFlags backend;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<ExampleRecord> records;
    try {
        records = load_records(a.dataset);
    } catch (const IoFailure& e) {
        throw Exit{kExitInputData, e.what()};
    } catch (const MalformedRecord& e) {
        throw Exit{kExitInputData, a.dataset + ": " + e.what()};
    }
    if (records.empty()) throw Exit{kExitInputData, a.dataset + " has no records"};

    auto backend = a.backend.make();
    ensure_reachable(*backend);
    EvalOptions opts;
    opts.concurrency = a.concurrency;
    opts.results_path = a.out;
    EvalOutcome outcome;
    try {
        outcome = run_evaluation(records, *backend, opts);
    } catch (const BackendError& e) {
        throw Exit{kExitOperational, std::string(e.kind()) + ": " + e.what() + " (partial results in " +
                                         a.out + ")"};
    } catch (const IoFailure& e) {
        throw Exit{kExitOperational, e.what()};
    }
    if (a.csv) {
        std::ofstream f(*a.csv, std::ios::binary | std::ios::trunc);
        if (!f || !(f << outcome_to_csv(outcome))) throw Exit{kExitOperational, "cannot write " + *a.csv};
    }

    if (a.format == "json") {
        out << ojson::parse(outcome_to_json(outcome))["report"].dump(2) << '\n';
    } else {
        out << summary_table(outcome.report) << '\n'
            << "Confusion matrix (six most frequent categories)\n"
            << outcome.report.confusion.top_k(6).to_text();
    }
    err << "wrote " << a.out << '\n';
    return kExitOk;
}

// -------------------------------------------------------------------- serve

struct ServeArgs {
    ServiceConfig config;
    BackendFlags backend;
};

int cmd_serve(ServeArgs a, std::ostream&, std::ostream& err) {
    BackendRegistry registry;
    try {
        auto backend = a.backend.make();
        if (backend->kind() == BackendKind::Signature) {
            registry.add("signature", backend);
        } else {
            registry.add("signature", std::make_shared<SignatureBackend>(a.backend.rule_table()));
            registry.add(std::string(to_string(backend->kind())), backend, true);
        }
    } catch (const InvalidValue& e) {
        throw Exit{kExitOperational, e.what()};
    }
    Service service(a.config, std::move(registry));
    try {
        const int port = service.bind();
        err << "listening on http://" << a.config.host << ":" << port << '\n';
    } catch (const Error& e) {
        throw Exit{kExitOperational, e.what()};
    }
    service.run();
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Security log triage: analysis, dataset generation, evaluation and serving", "opensoc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    AnalyzeArgs analyze;
    auto* c_analyze = app.add_subcommand("analyze", "Analyze one log line or a log file");
    c_analyze->add_option("log", analyze.log, "raw log line");
    c_analyze->add_option("--file", analyze.file, "read entries from a .log/.txt/.csv file");
    c_analyze->add_option("--format", analyze.format)->check(CLI::IsMember({"text", "json", "csv"}));
    analyze.backend.attach(*c_analyze);

    BatchArgs batch;
    auto* c_batch = app.add_subcommand("batch", "Analyze every entry of a log file");
    c_batch->add_option("file", batch.file, "input .log/.txt/.csv")->required();
    c_batch->add_option("--format", batch.format)->check(CLI::IsMember({"text", "json", "csv"}));
    c_batch->add_option("--out", batch.out, "output file (default stdout)");
    c_batch->add_option("--parallelism", batch.parallelism)->check(CLI::PositiveNumber);
    batch.backend.attach(*c_batch);

    GenArgs gen;
    auto* c_gen = app.add_subcommand("gen-dataset", "Write soc_train.json and soc_eval.json");
    c_gen->add_option("--train", gen.train, "training records")->check(CLI::NonNegativeNumber);
    c_gen->add_option("--eval", gen.eval, "evaluation records")->check(CLI::NonNegativeNumber);
    c_gen->add_option("--seed", gen.seed);
    c_gen->add_option("--out", gen.out, "output directory");
    c_gen->add_option("--rules", gen.rules, "JSON rule table used for labeling");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Score a backend on an evaluation split");
    c_eval->add_option("--dataset", eval.dataset, "records file (soc_eval.json)")->required();
    c_eval->add_option("--out", eval.out, "per-record results file");
    c_eval->add_option("--csv", eval.csv, "also write predictions as CSV");
    c_eval->add_option("--format", eval.format)->check(CLI::IsMember({"text", "json"}));
    c_eval->add_option("--concurrency", eval.concurrency)->check(CLI::PositiveNumber);
    eval.backend.attach(*c_eval);

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP service");
    c_serve->add_option("--host", serve.config.host);
    c_serve->add_option("--port", serve.config.port)->check(CLI::Range(0, 65535));
    c_serve->add_option("--parallelism", serve.config.parallelism)->check(CLI::PositiveNumber);
    c_serve->add_option("--max-upload-bytes", serve.config.max_upload_bytes)->check(CLI::PositiveNumber);
    c_serve->add_option("--max-jobs", serve.config.job_capacity)->check(CLI::PositiveNumber);
    c_serve->add_option("--static", serve.config.static_dir, "directory served under /");
    serve.backend.attach(*c_serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitOperational;
    }

    try {
        if (*c_analyze) return cmd_analyze(analyze, out, err);
        if (*c_batch) return cmd_batch(batch, out, err);
        if (*c_gen) return cmd_gen_dataset(gen, out, err);
        if (*c_eval) return cmd_eval(eval, out, err);
        if (*c_serve) return cmd_serve(serve, out, err);
    } catch (const Exit& e) {
        err << "opensoc: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        err << "opensoc: " << e.what() << '\n';
        return kExitOperational;
    }
    return kExitOperational;
}

}  // namespace opensoc::cli
