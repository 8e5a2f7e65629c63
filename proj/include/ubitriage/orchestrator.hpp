#pragma once

#include "ubitriage/constraint_expr.hpp"
#include "ubitriage/corpus_index.hpp"
#include "ubitriage/llm_gateway.hpp"
#include "ubitriage/prompt_pack.hpp"
#include "ubitriage/report_model.hpp"
#include "ubitriage/routine_model.hpp"
#include "ubitriage/structured_response.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ubitriage::orchestrator {

enum class Decision { Bug, NonBug, NoInitializer, Inconclusive };

std::string_view to_string(Decision d);
/// Throws ParseError for unknown names.
Decision decision_from_string(std::string_view s);

enum class Ablation { Full, OneStep, ZeroStep };

std::string_view to_string(Ablation a);
/// Accepts `full`, `one-step`, `zero-step`. Throws ConfigError.
Ablation ablation_from_string(std::string_view s);

struct Settings {
    /// Odd and at least 1.
    int votes = 3;
    Ablation ablation = Ablation::Full;
    constraint::Domain domain;
    /// Directory of `<callee>.json` routine models used to cross-check the
    /// model's must_init.
    std::optional<std::filesystem::path> routine_models;

    /// Throws ConfigError.
    void validate() const;
};

/// Per-case scratch: every conversation opened, in order, and any warnings.
struct Trace {
    std::vector<llm::Conversation> conversations;
    std::vector<std::string> warnings;
};

/// Outcome of one independent run of the protocol.
struct RunRecord {
    int run = 0;
    Decision decision = Decision::Inconclusive;
    std::string reason;
    std::vector<std::string> initializers;
    std::set<std::string> suspicious;
    constraint::QualifiedPostcondition qualified;
    bool merged = false;
    std::size_t turns = 0;
    std::size_t tokens = 0;
};

struct CaseVerdict {
    std::string case_id;
    Decision decision = Decision::Inconclusive;
    std::string reason;
    std::vector<Decision> votes;
    std::vector<RunRecord> runs;
    /// The qualified postcondition behind the decision (from the first run
    /// that reached it).
    constraint::QualifiedPostcondition qualified;
    std::set<std::string> suspicious;
    bool merged = false;
    std::vector<std::string> warnings;
    std::vector<llm::Conversation> conversations;
    std::size_t total_turns = 0;
    std::size_t total_tokens = 0;
};

/// Non-bug iff the use is unreachable or every suspicious name is must_init.
Decision decide(const constraint::QualifiedPostcondition& q, const std::set<std::string>& suspicious);
Decision decide(const ConvoTwoResult& r, const std::set<std::string>& suspicious);

/// Combines per-run decisions. `planned` is the number of runs the vote was
/// sized for; a decision needs floor(planned / 2) + 1 agreeing runs.
Decision tally(const std::vector<Decision>& votes, int planned);

class Orchestrator {
public:
    Orchestrator(const corpus::CorpusIndex& corpus, llm::Gateway& gateway, const PromptPack& pack,
                 Settings settings = {});

    /// Identify initializers and post-constraints: analysis, self-validation
    /// and structured turns, plus at most one repair. An empty list means the
    /// caller has no initializer. Throws ProtocolError when the structured
    /// answer stays unreadable; gateway errors propagate.
    InitializerList run_convo_one(const report::BugReport& report, const corpus::FunctionDef& caller, int run,
                                  Trace& trace);

    /// Summarize the initializer under its post-constraint, supplying
    /// requested definitions. Turn-cap and context overflow give status
    /// inconclusive. Throws ProtocolError when the structured answer stays
    /// unreadable.
    ConvoTwoResult run_convo_two(const report::BugReport& report, const ConvoOneResult& c1, int run, int part,
                                 Trace& trace);

    /// All runs for one case, with early stopping.
    CaseVerdict run_case(const report::BugReport& report);

    /// Number of runs `run_case` plans for a case.
    [[nodiscard]] int planned_votes(const std::string& case_id) const;

    [[nodiscard]] const Settings& settings() const noexcept { return settings_; }

    /// One independent run: both conversations (or the ablation prompt) and
    /// the decision. Errors become an inconclusive record.
    RunRecord run_once(const report::BugReport& report, const corpus::FunctionDef& caller, int run, Trace& trace);

private:
    RunRecord run_ablation(const report::BugReport& report, const corpus::FunctionDef& caller, int run,
                           Trace& trace);
    void cross_check(const ConvoOneResult& c1, const ConvoTwoResult& c2, Trace& trace) const;
    std::string supply(const RequestList& requests, const report::BugReport& report);
    std::string definition_block(const corpus::FunctionDef& def) const;

    const corpus::CorpusIndex& corpus_;
    llm::Gateway& gateway_;
    const PromptPack& pack_;
    Settings settings_;
};

}  // namespace ubitriage::orchestrator
