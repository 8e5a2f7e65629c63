#include "ubitriage/orchestrator.hpp"

#include "ubitriage/error.hpp"

#include <algorithm>
#include <map>

namespace ubitriage::orchestrator {

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::Bug:
            return "bug";
        case Decision::NonBug:
            return "non_bug";
        case Decision::NoInitializer:
            return "no_initializer";
        case Decision::Inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

Decision decision_from_string(std::string_view s) {
    for (auto d : {Decision::Bug, Decision::NonBug, Decision::NoInitializer, Decision::Inconclusive}) {
        if (to_string(d) == s) {
            return d;
        }
    }
    throw ParseError("unknown decision '" + std::string(s) + "'", 0);
}

std::string_view to_string(Ablation a) {
    switch (a) {
        case Ablation::Full:
            return "full";
        case Ablation::OneStep:
            return "one-step";
        case Ablation::ZeroStep:
            return "zero-step";
    }
    return "full";
}

Ablation ablation_from_string(std::string_view s) {
    for (auto a : {Ablation::Full, Ablation::OneStep, Ablation::ZeroStep}) {
        if (to_string(a) == s) {
            return a;
        }
    }
    throw ConfigError("unknown ablation mode '" + std::string(s) + "'");
}

void Settings::validate() const {
    if (votes < 1 || votes % 2 == 0) {
        throw ConfigError("votes must be an odd number >= 1, got " + std::to_string(votes));
    }
    if (domain.lo > domain.hi) {
        throw ConfigError("empty variable domain");
    }
}

Decision decide(const constraint::QualifiedPostcondition& q, const std::set<std::string>& suspicious) {
    if (q.unreachable_use) {
        return Decision::NonBug;
    }
    for (const auto& name : suspicious) {
        if (!q.must_init.contains(name)) {
            return Decision::Bug;
        }
    }
    return Decision::NonBug;
}

Decision decide(const ConvoTwoResult& r, const std::set<std::string>& suspicious) {
    constraint::QualifiedPostcondition q;
    q.must_init.insert(r.must_init.begin(), r.must_init.end());
    return decide(q, suspicious);
}

Decision tally(const std::vector<Decision>& votes, int planned) {
    const auto needed = static_cast<std::size_t>(planned / 2 + 1);
    std::map<Decision, std::size_t> counts;
    for (auto d : votes) {
        if (d != Decision::Inconclusive && ++counts[d] >= needed) {
            return d;
        }
    }
    return Decision::Inconclusive;
}

namespace {

/// Opens a conversation and files it in the trace when done, whatever
/// happened in between.
class Session {
public:
    Session(llm::Gateway& gateway, Trace& trace, std::string system_prompt, llm::ConversationId id)
        : gateway_(gateway), trace_(trace), conv_(gateway.open_conversation(std::move(system_prompt), std::move(id))) {}

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    ~Session() { trace_.conversations.push_back(std::move(conv_)); }

    std::string send(const std::string& prompt) { return gateway_.send_turn(conv_, prompt); }

    [[nodiscard]] bool at_cap() const { return conv_.turns.size() >= conv_.max_turns; }

private:
    llm::Gateway& gateway_;
    Trace& trace_;
    llm::Conversation conv_;
};

std::optional<StructuredResponse> try_parse(const std::string& text) {
    try {
        return parse_structured_response(text);
    } catch (const ParseError&) {
        return std::nullopt;
    }
}

/// Requests carried by a response, if it asks for anything.
RequestList requests_in(const std::optional<StructuredResponse>& parsed) {
    if (!parsed) {
        return {};
    }
    if (const auto* list = std::get_if<RequestList>(&*parsed)) {
        return *list;
    }
    if (const auto* summary = std::get_if<ConvoTwoResult>(&*parsed)) {
        if (summary->status == ConvoTwoStatus::NeedMoreInfo) {
            return summary->requests;
        }
    }
    return {};
}

/// A final summary, if the response is one.
std::optional<ConvoTwoResult> summary_in(const std::optional<StructuredResponse>& parsed) {
    if (!parsed) {
        return std::nullopt;
    }
    if (const auto* summary = std::get_if<ConvoTwoResult>(&*parsed)) {
        if (summary->status != ConvoTwoStatus::NeedMoreInfo) {
            return *summary;
        }
    }
    return std::nullopt;
}

std::optional<InitializerList> initializers_in(const std::string& text) {
    const auto parsed = try_parse(text);
    if (parsed) {
        if (const auto* list = std::get_if<InitializerList>(&*parsed)) {
            return *list;
        }
    }
    return std::nullopt;
}

std::string join(const std::set<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        out += out.empty() ? n : ", " + n;
    }
    return out;
}

Slots case_slots(const report::BugReport& report, const corpus::FunctionDef& caller, const PromptPack& pack) {
    return {{"caller_source", caller.text},
            {"caller", caller.name},
            {"variable", report.variable},
            {"file", report.file},
            {"line", std::to_string(report.line)},
            {"few_shot_block", pack.render("few_shot")}};
}

ConvoTwoResult inconclusive(std::string reason) {
    ConvoTwoResult r;
    r.status = ConvoTwoStatus::Inconclusive;
    r.reason = std::move(reason);
    return r;
}

}  // namespace

Orchestrator::Orchestrator(const corpus::CorpusIndex& corpus, llm::Gateway& gateway, const PromptPack& pack,
                           Settings settings)
    : corpus_(corpus), gateway_(gateway), pack_(pack), settings_(std::move(settings)) {
    settings_.validate();
}

InitializerList Orchestrator::run_convo_one(const report::BugReport& report, const corpus::FunctionDef& caller,
                                            int run, Trace& trace) {
    Session s(gateway_, trace, pack_.render("system"), {report.id, "convo1", run, 0});
    const auto slots = case_slots(report, caller, pack_);

    s.send(pack_.render("convo1_analysis", slots));
    s.send(pack_.render("convo1_validate", slots));
    auto result = initializers_in(s.send(pack_.render("convo1_structured", slots)));
    if (!result) {
        result = initializers_in(s.send(pack_.render("repair", slots)));
    }
    if (!result) {
        throw ProtocolError("case " + report.id + ": no readable initializer document after one repair");
    }
    for (auto& init : *result) {
        if (init.suspicious.empty()) {
            init.suspicious.push_back(report.variable);
        }
    }
    return *result;
}

std::string Orchestrator::definition_block(const corpus::FunctionDef& def) const {
    return "// " + def.file + ":" + std::to_string(def.start_line) + "-" + std::to_string(def.end_line) + "\n" +
           def.text;
}

std::string Orchestrator::supply(const RequestList& requests, const report::BugReport& report) {
    std::string defs;
    std::set<std::string> missing;
    std::set<std::string> seen;
    for (const auto& req : requests) {
        if (!seen.insert(req.type + "\n" + req.name).second) {
            continue;
        }
        if (req.type != "function_def") {
            missing.insert(req.name);
            continue;
        }
        try {
            const auto def = corpus_.extract_function(req.name, report.file);
            defs += (defs.empty() ? "" : "\n\n") + definition_block(def);
        } catch (const NotFoundError&) {
            missing.insert(req.name);
        } catch (const AmbiguityError&) {
            missing.insert(req.name);
        }
    }
    std::string prompt;
    if (!defs.empty()) {
        prompt = pack_.render("convo2_supply", {{"supplied_defs", defs}});
    }
    if (!missing.empty()) {
        prompt += (prompt.empty() ? "" : "\n\n") + pack_.render("convo2_proceed", {{"names", join(missing)}});
    }
    return prompt;
}

ConvoTwoResult Orchestrator::run_convo_two(const report::BugReport& report, const ConvoOneResult& c1, int run,
                                           int part, Trace& trace) {
    Session s(gateway_, trace, pack_.render("system"), {report.id, "convo2", run, part});

    std::string callee_def = "(definition not available)";
    if (!c1.initializer_callee.empty()) {
        try {
            callee_def = definition_block(corpus_.extract_function(c1.initializer_callee, report.file));
        } catch (const NotFoundError&) {
        } catch (const AmbiguityError&) {
        }
    }
    const Slots seed_slots = {{"request_doc", request_document(c1)},
                              {"callee", c1.initializer_callee},
                              {"supplied_defs", callee_def},
                              {"variable", report.variable}};

    enum class Phase { Explore, Validate, Structured };
    Phase phase = Phase::Explore;
    bool repaired = false;

    try {
        std::string response = s.send(pack_.render("convo2_seed", seed_slots));
        while (true) {
            const auto parsed = try_parse(response);
            std::string next;
            if (const auto requests = requests_in(parsed); !requests.empty()) {
                next = supply(requests, report);
                phase = Phase::Explore;
            } else if (phase == Phase::Explore) {
                next = pack_.render("convo2_validate", seed_slots);
                phase = Phase::Validate;
            } else if (phase == Phase::Validate) {
                next = pack_.render("convo2_structured", seed_slots);
                phase = Phase::Structured;
            } else if (auto summary = summary_in(parsed)) {
                return *summary;
            } else if (!repaired) {
                repaired = true;
                next = pack_.render("repair", seed_slots);
            } else {
                throw ProtocolError("case " + report.id + ": no readable summary document after one repair");
            }
            if (s.at_cap()) {
                return inconclusive("turn cap of " + std::to_string(gateway_.config().max_turns) + " reached");
            }
            response = s.send(next);
        }
    } catch (const TurnCapError& e) {
        return inconclusive(e.what());
    } catch (const OverflowError& e) {
        return inconclusive(e.what());
    }
}

void Orchestrator::cross_check(const ConvoOneResult& c1, const ConvoTwoResult& c2, Trace& trace) const {
    if (!settings_.routine_models || c1.initializer_callee.empty()) {
        return;
    }
    const auto path = *settings_.routine_models / (c1.initializer_callee + ".json");
    if (!std::filesystem::exists(path)) {
        return;
    }
    constraint::Expr cpost;
    try {
        cpost = constraint::parse_constraint(c1.postconstraint);
    } catch (const ParseError&) {
        return;
    }
    try {
        const auto model = constraint::load_routine_model(path);
        const std::set<std::string> suspicious(c1.suspicious.begin(), c1.suspicious.end());
        const auto core = constraint::qualified_postcondition(model, cpost, suspicious, settings_.domain);
        const std::set<std::string> reported(c2.must_init.begin(), c2.must_init.end());
        std::set<std::string> core_must;
        std::set<std::string> model_must;
        for (const auto& name : suspicious) {
            if (core.must_init.contains(name)) {
                core_must.insert(name);
            }
            if (reported.contains(name)) {
                model_must.insert(name);
            }
        }
        if (core_must != model_must) {
            trace.warnings.push_back("core disagrees on " + c1.initializer_callee + " under '" + cpost.to_string() +
                                     "': core must_init {" + join(core_must) + "}, model must_init {" +
                                     join(model_must) + "}");
        }
    } catch (const Error& e) {
        trace.warnings.push_back("core check skipped for " + c1.initializer_callee + ": " + e.what());
    }
}

RunRecord Orchestrator::run_ablation(const report::BugReport& report, const corpus::FunctionDef& caller, int run,
                                     Trace& trace) {
    const auto label = std::string(to_string(settings_.ablation));
    const auto tpl = settings_.ablation == Ablation::ZeroStep ? "zero_step" : "one_step";
    Session s(gateway_, trace, pack_.render("system"), {report.id, label, run, 0});
    const auto slots = case_slots(report, caller, pack_);

    auto summary = summary_in(try_parse(s.send(pack_.render(tpl, slots))));
    if (!summary) {
        summary = summary_in(try_parse(s.send(pack_.render("repair", slots))));
    }
    if (!summary) {
        throw ProtocolError("case " + report.id + ": no readable summary document after one repair");
    }
    RunRecord rec;
    rec.run = run;
    rec.suspicious = {report.variable};
    if (summary->status != ConvoTwoStatus::Success) {
        rec.reason = summary->reason;
        return rec;
    }
    rec.qualified.must_init.insert(summary->must_init.begin(), summary->must_init.end());
    for (const auto& m : summary->may_init) {
        rec.qualified.may_init.push_back({m.name, std::nullopt, m.condition});
    }
    rec.decision = decide(rec.qualified, rec.suspicious);
    return rec;
}

RunRecord Orchestrator::run_once(const report::BugReport& report, const corpus::FunctionDef& caller, int run,
                                 Trace& trace) {
    const auto first = trace.conversations.size();
    RunRecord rec;
    rec.run = run;
    try {
        if (settings_.ablation != Ablation::Full) {
            rec = run_ablation(report, caller, run, trace);
        } else {
            const auto inits = run_convo_one(report, caller, run, trace);
            if (inits.empty()) {
                rec.decision = Decision::NoInitializer;
            } else {
                rec.merged = inits.size() > 1;
                bool complete = true;
                std::vector<MayInitEntry> may;
                for (std::size_t i = 0; i < inits.size(); ++i) {
                    const auto& c1 = inits[i];
                    rec.initializers.push_back(c1.initializer);
                    rec.suspicious.insert(c1.suspicious.begin(), c1.suspicious.end());
                    const auto c2 = run_convo_two(report, c1, run, static_cast<int>(i), trace);
                    if (c2.status != ConvoTwoStatus::Success) {
                        rec.reason = c2.reason.empty() ? "summary inconclusive" : c2.reason;
                        complete = false;
                        break;
                    }
                    cross_check(c1, c2, trace);
                    rec.qualified.must_init.insert(c2.must_init.begin(), c2.must_init.end());
                    may.insert(may.end(), c2.may_init.begin(), c2.may_init.end());
                }
                if (complete) {
                    std::set<std::string> listed;
                    for (const auto& m : may) {
                        if (!rec.qualified.must_init.contains(m.name) && listed.insert(m.name).second) {
                            rec.qualified.may_init.push_back({m.name, std::nullopt, m.condition});
                        }
                    }
                    rec.decision = decide(rec.qualified, rec.suspicious);
                }
            }
        }
    } catch (const Error& e) {
        rec.decision = Decision::Inconclusive;
        rec.reason = e.what();
    }
    rec.run = run;
    for (std::size_t i = first; i < trace.conversations.size(); ++i) {
        rec.turns += trace.conversations[i].turns.size();
        rec.tokens += trace.conversations[i].total_tokens();
    }
    return rec;
}

int Orchestrator::planned_votes(const std::string& case_id) const {
    if (gateway_.backend().deterministic()) {
        const int recorded = gateway_.backend().recorded_runs(case_id).value_or(1);
        return std::max(1, std::min(settings_.votes, recorded));
    }
    return settings_.votes;
}

CaseVerdict Orchestrator::run_case(const report::BugReport& report) {
    CaseVerdict v;
    v.case_id = report.id;

    corpus::FunctionDef caller;
    try {
        caller = corpus_.enclosing_function(report.file, report.line);
    } catch (const Error& e) {
        v.reason = std::string("caller not found: ") + e.what();
        return v;
    }

    Trace trace;
    const int planned = planned_votes(report.id);
    const auto needed = static_cast<std::size_t>(planned / 2 + 1);
    for (int run = 0; run < planned; ++run) {
        auto rec = run_once(report, caller, run, trace);
        const auto d = rec.decision;
        v.votes.push_back(d);
        v.runs.push_back(std::move(rec));
        if (d != Decision::Inconclusive &&
            static_cast<std::size_t>(std::count(v.votes.begin(), v.votes.end(), d)) >= needed) {
            break;
        }
    }

    v.decision = tally(v.votes, planned);
    if (v.decision == Decision::Inconclusive) {
        for (const auto& r : v.runs) {
            if (r.decision == Decision::Inconclusive) {
                v.reason = r.reason;
                break;
            }
        }
        if (v.reason.empty()) {
            v.reason = "no majority among runs";
        }
    } else {
        for (const auto& r : v.runs) {
            if (r.decision == v.decision) {
                v.qualified = r.qualified;
                v.suspicious = r.suspicious;
                v.merged = r.merged;
                break;
            }
        }
    }
    for (const auto& r : v.runs) {
        v.total_turns += r.turns;
        v.total_tokens += r.tokens;
    }
    v.conversations = std::move(trace.conversations);
    v.warnings = std::move(trace.warnings);
    return v;
}

}  // namespace ubitriage::orchestrator
