#include "ubitriage/cli.hpp"

#include "ubitriage/constraint_expr.hpp"
#include "ubitriage/corpus_index.hpp"
#include "ubitriage/error.hpp"
#include "ubitriage/llm_gateway.hpp"
#include "ubitriage/orchestrator.hpp"
#include "ubitriage/prompt_pack.hpp"
#include "ubitriage/report_model.hpp"
#include "ubitriage/routine_model.hpp"
#include "ubitriage/store.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef UBITRIAGE_VERSION
#define UBITRIAGE_VERSION "0.0.0"
#endif
#ifndef UBITRIAGE_DEFAULT_PACK
#define UBITRIAGE_DEFAULT_PACK "prompts/default"
#endif

namespace ubitriage::cli {

namespace {

struct IndexOptions {
    std::string corpus;
    std::string store = "ubitriage-store";
};

struct AnalyzeOptions {
    std::string corpus;
    std::string report;
    std::string backend = "replay";
    std::string model = "gpt-4-0613";
    std::string endpoint;
    std::string transcripts;
    std::string pack = UBITRIAGE_DEFAULT_PACK;
    std::string models;
    std::string store = "ubitriage-store";
    std::string batch = "default";
    std::string domain = "-4..7";
    std::string ablation = "full";
    int votes = 3;
    int workers = 1;
    int max_turns = 8;
    bool strict = false;
};

struct OracleOptions {
    std::string model;
    std::string cpost;
    std::string suspicious;
    std::string domain = "-4..7";
};

struct StatsOptions {
    std::string store = "ubitriage-store";
    std::string batch;
};

std::string join(const std::set<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        out += out.empty() ? n : "," + n;
    }
    return out;
}

std::set<std::string> split_names(const std::string& text) {
    std::set<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.insert(item.substr(b, e - b + 1));
        }
    }
    return out;
}

std::string describe(const constraint::QualifiedPostcondition& q) {
    std::string s = "must_init {" + join(q.must_init) + "}";
    s += " may_init {";
    bool first = true;
    for (const auto& m : q.may_init) {
        s += (first ? "" : ", ") + m.name + " if " + m.condition_text;
        first = false;
    }
    s += "}";
    if (q.unreachable_use) {
        s += " unreachable_use";
    }
    return s;
}

int cmd_index(const IndexOptions& o, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::is_directory(o.corpus)) {
        err << "error: corpus root is not a readable directory: " << o.corpus << "\n";
        return kExitUsage;
    }
    store::Store st(o.store);
    bool rebuilt = false;
    const auto index = corpus::load_or_build_index(o.corpus, st.cache_dir() / "index.json", &rebuilt);
    std::size_t defs = 0;
    for (const auto& [name, locs] : index.definitions()) {
        (void)name;
        defs += locs.size();
    }
    for (const auto& w : index.stats().warnings) {
        err << "warning: " << w << "\n";
    }
    out << defs << " functions indexed (" << index.stats().files_scanned << " files scanned, "
        << index.stats().warnings.size() << " warnings" << (rebuilt ? "" : ", from cache") << ")\n";
    return kExitOk;
}

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
    // Everything is validated before the first case runs.
    if (o.corpus.empty() || !std::filesystem::is_directory(o.corpus)) {
        throw ConfigError("--corpus must name an existing directory");
    }
    if (o.report.empty()) {
        throw ConfigError("--report is required");
    }
    if (o.workers < 1) {
        throw ConfigError("--workers must be at least 1");
    }
    if (o.max_turns < 1) {
        throw ConfigError("--max-turns must be at least 1");
    }

    llm::BackendConfig bc;
    bc.model = o.model;
    bc.max_turns = static_cast<std::size_t>(o.max_turns);
    if (o.backend == "replay") {
        bc.kind = llm::BackendKind::Replay;
        bc.transcript_path = o.transcripts;
    } else if (o.backend == "http") {
        bc.kind = llm::BackendKind::Http;
        bc.endpoint = o.endpoint;
        if (const char* key = std::getenv("LLIFT_API_KEY")) {
            bc.api_key = key;
        }
        if (bc.api_key.empty()) {
            throw ConfigError("LLIFT_API_KEY is not set; the http backend needs it");
        }
    } else {
        throw ConfigError("--backend must be replay or http");
    }
    bc.validate();

    orchestrator::Settings settings;
    settings.votes = o.votes;
    settings.ablation = orchestrator::ablation_from_string(o.ablation);
    settings.domain = constraint::parse_domain(o.domain);
    if (!o.models.empty()) {
        if (!std::filesystem::is_directory(o.models)) {
            throw ConfigError("--models must name an existing directory");
        }
        settings.routine_models = o.models;
    }
    settings.validate();

    const auto reports = report::parse_report_file(o.report);
    const auto pack = orchestrator::PromptPack::load(o.pack);
    std::unique_ptr<llm::Backend> backend;
    try {
        backend = llm::make_backend(bc);
    } catch (const SetupError& e) {
        throw ConfigError(e.what());
    }

    store::Store st(o.store);
    for (const auto& existing : st.read_verdicts()) {
        if (existing.batch != o.batch) {
            continue;
        }
        for (const auto& r : reports) {
            if (r.id == existing.case_id) {
                throw ConfigError("batch '" + o.batch + "' already holds a verdict for case '" + r.id +
                                  "'; pick another --batch");
            }
        }
    }

    const auto index = corpus::load_or_build_index(o.corpus, st.cache_dir() / "index.json");
    const bool deterministic = backend->deterministic();
    std::unique_ptr<store::DirectoryResponseCache> cache;
    if (!deterministic) {
        cache = std::make_unique<store::DirectoryResponseCache>(st.cache_dir() / "responses");
    }
    llm::Gateway gateway(bc, std::move(backend), cache.get());
    orchestrator::Orchestrator orch(index, gateway, pack, settings);

    std::vector<orchestrator::CaseVerdict> verdicts(reports.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mu;
    auto worker = [&] {
        for (auto i = next++; i < reports.size(); i = next++) {
            {
                std::lock_guard lock(log_mu);
                err << "[" << (i + 1) << "/" << reports.size() << "] " << reports[i].id << "\n";
            }
            verdicts[i] = orch.run_case(reports[i]);
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(o.workers), std::max<std::size_t>(1, reports.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    const store::RecordContext ctx{o.batch, gateway.backend().describe(), o.model, pack.name() + "@" + pack.version(),
                                   deterministic ? store::kEpochTimestamp : store::utc_timestamp()};
    std::map<std::string, std::size_t> counts = {{"bug", 0}, {"non_bug", 0}, {"no_initializer", 0}, {"inconclusive", 0}};
    bool any_inconclusive = false;
    for (const auto& v : verdicts) {
        const auto decision = std::string(orchestrator::to_string(v.decision));
        ++counts[decision];
        any_inconclusive = any_inconclusive || v.decision == orchestrator::Decision::Inconclusive;
        std::string votes;
        for (auto d : v.votes) {
            votes += (votes.empty() ? "" : ",") + std::string(orchestrator::to_string(d));
        }
        out << v.case_id << "\t" << decision << "\tvotes=[" << votes << "]\tturns=" << v.total_turns;
        if (!v.reason.empty()) {
            out << "\treason=" << v.reason;
        }
        out << "\n";
        for (const auto& w : v.warnings) {
            err << "warning: " << v.case_id << ": " << w << "\n";
        }
        try {
            auto paths = st.write_transcripts(v.conversations);
            st.append_verdict(store::make_record(v, ctx, std::move(paths)));
        } catch (const StoreError& e) {
            err << "error: " << v.case_id << ": " << e.what() << "\n";
        }
    }
    out << "bug: " << counts["bug"] << ", non_bug: " << counts["non_bug"] << ", no_initializer: "
        << counts["no_initializer"] << ", inconclusive: " << counts["inconclusive"] << "\n";
    if (!deterministic) {
        err << "backend calls: " << gateway.backend_calls() << ", cache hits: " << gateway.cache_hits() << "\n";
    }
    return (o.strict && any_inconclusive) ? kExitInconclusive : kExitOk;
}

int cmd_oracle(const OracleOptions& o, std::ostream& out) {
    const auto model = constraint::load_routine_model(o.model);
    const auto domain = constraint::parse_domain(o.domain);
    const auto cpost =
        constraint::parse_constraint(o.cpost.empty() ? std::nullopt : std::optional<std::string_view>(o.cpost));
    auto suspicious = split_names(o.suspicious);
    if (suspicious.empty()) {
        for (const auto& p : model.paths) {
            suspicious.insert(p.initialized.begin(), p.initialized.end());
        }
    }
    if (suspicious.empty()) {
        throw ConfigError("no suspicious variables given and the model initializes none");
    }
    const auto core = constraint::qualified_postcondition(model, cpost, suspicious, domain);
    const auto oracle = constraint::brute_force_oracle(model, cpost, suspicious, domain);
    const auto kept = constraint::prune_paths(model, cpost, domain);

    out << "routine: " << model.name << "\n";
    out << "cpost: " << cpost.to_string() << "\n";
    out << "surviving paths:";
    for (const auto& p : kept) {
        out << " " << p.name;
    }
    out << "\n";
    out << "core:   " << describe(core) << "\n";
    out << "oracle: " << describe(oracle) << "\n";
    out << (core.must_init == oracle.must_init ? "must_init agrees" : "DISAGREEMENT on must_init") << "\n";
    return kExitOk;
}

int cmd_stats(const StatsOptions& o, std::ostream& out) {
    if (!std::filesystem::exists(std::filesystem::path(o.store) / "verdicts.jsonl")) {
        throw NotFoundError("no verdict store at " + o.store);
    }
    const store::Store st(o.store);
    const auto s = st.batch_stats(o.batch.empty() ? std::nullopt : std::optional<std::string>(o.batch));
    out << "cases: " << s.cases << "\n";
    for (const auto& [decision, n] : s.decisions) {
        out << "  " << decision << ": " << n << "\n";
    }
    std::ostringstream nums;
    nums.precision(4);
    nums << std::fixed << "turns: mean " << s.turn_mean() << ", max " << s.turn_max << ", variance "
         << s.turn_variance() << "\n";
    out << nums.str();
    out << "tokens: " << s.total_tokens << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Triage use-before-initialization reports with a language model"};
    app.set_version_flag("--version", UBITRIAGE_VERSION);
    app.set_config("--config", "", "TOML or INI file with option defaults");
    app.require_subcommand(1);

    IndexOptions io;
    auto* index = app.add_subcommand("index", "Index the C sources under a directory");
    index->add_option("corpus,--corpus", io.corpus, "Corpus root")->required();
    index->add_option("--store", io.store, "Store directory (the index cache lives in its cache/)");

    AnalyzeOptions ao;
    auto* analyze = app.add_subcommand("analyze", "Triage every case in a report file");
    analyze->add_option("--corpus", ao.corpus, "Corpus root")->required();
    analyze->add_option("--report", ao.report, "Report file")->required();
    analyze->add_option("--backend", ao.backend, "replay or http")->check(CLI::IsMember({"replay", "http"}));
    analyze->add_option("--model", ao.model, "Model name");
    analyze->add_option("--endpoint", ao.endpoint, "Chat-completion base URL (http backend)");
    analyze->add_option("--transcripts", ao.transcripts, "Recorded transcripts (replay backend)");
    analyze->add_option("--pack", ao.pack, "Prompt pack directory");
    analyze->add_option("--models", ao.models, "Routine models for cross-checking");
    analyze->add_option("--votes", ao.votes, "Runs per case (odd)");
    analyze->add_option("--workers", ao.workers, "Cases analyzed concurrently");
    analyze->add_option("--max-turns", ao.max_turns, "Turn cap per conversation");
    analyze->add_option("--domain", ao.domain, "Integer domain LO..HI for feasibility checks");
    analyze->add_option("--store", ao.store, "Store directory");
    analyze->add_option("--batch", ao.batch, "Batch identifier");
    analyze->add_option("--ablation", ao.ablation, "full, one-step or zero-step")
        ->check(CLI::IsMember({"full", "one-step", "zero-step"}));
    analyze->add_flag("--strict", ao.strict, "Exit 3 when any case is inconclusive");

    OracleOptions oo;
    auto* oracle = app.add_subcommand("oracle", "Compare pruning with exhaustive enumeration on a routine model");
    oracle->add_option("model,--model", oo.model, "Routine model file")->required();
    oracle->add_option("--cpost", oo.cpost, "Post-constraint (default TOP)");
    oracle->add_option("--suspicious", oo.suspicious, "Comma-separated names (default: all initialized names)");
    oracle->add_option("--domain", oo.domain, "Integer domain LO..HI");

    StatsOptions so;
    auto* stats = app.add_subcommand("stats", "Summarize stored verdicts");
    stats->add_option("--store", so.store, "Store directory");
    stats->add_option("--batch", so.batch, "Batch identifier (default: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*index) {
            return cmd_index(io, out, err);
        }
        if (*analyze) {
            return cmd_analyze(ao, out, err);
        }
        if (*oracle) {
            return cmd_oracle(oo, out);
        }
        return cmd_stats(so, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace ubitriage::cli
