// Replays every recorded run of every case and rewrites the prompt digests in
// the transcript documents to match the current prompt pack.

#include "ubitriage/corpus_index.hpp"
#include "ubitriage/error.hpp"
#include "ubitriage/llm_gateway.hpp"
#include "ubitriage/orchestrator.hpp"
#include "ubitriage/prompt_pack.hpp"
#include "ubitriage/report_model.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ubitriage;

int main(int argc, char** argv) {
    CLI::App app{"Pin prompt digests in replay transcripts"};
    std::string corpus_root;
    std::string report_path;
    std::string transcripts;
    std::string pack_dir = UBITRIAGE_DEFAULT_PACK;
    std::string ablation = "full";
    app.add_option("--corpus", corpus_root)->required();
    app.add_option("--report", report_path)->required();
    app.add_option("--transcripts", transcripts)->required();
    app.add_option("--pack", pack_dir);
    app.add_option("--ablation", ablation);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto index = corpus::build_index(corpus_root);
        const auto pack = orchestrator::PromptPack::load(pack_dir);
        const auto reports = report::parse_report_file(report_path);

        llm::BackendConfig bc;
        bc.transcript_path = transcripts;
        auto backend = std::make_unique<llm::ReplayBackend>(transcripts, /*pin=*/true);
        auto* replay = backend.get();
        llm::Gateway gateway(bc, std::move(backend));
        orchestrator::Settings settings;
        settings.ablation = orchestrator::ablation_from_string(ablation);
        orchestrator::Orchestrator orch(index, gateway, pack, settings);

        for (const auto& r : reports) {
            const int runs = replay->recorded_runs(r.id).value_or(0);
            if (runs == 0) {
                std::cerr << r.id << ": no transcript, skipped\n";
                continue;
            }
            const auto caller = index.enclosing_function(r.file, r.line);
            for (int run = 0; run < runs; ++run) {
                orchestrator::Trace trace;
                const auto rec = orch.run_once(r, caller, run, trace);
                std::cout << r.id << " run " << run << ": " << orchestrator::to_string(rec.decision) << " ("
                          << rec.turns << " turns)";
                if (!rec.reason.empty()) {
                    std::cout << " " << rec.reason;
                }
                std::cout << "\n";
            }
        }
        replay->save();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
