#include "ubitriage/routine_model.hpp"

#include "ubitriage/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ubitriage::constraint {

void validate(const RoutineModel& model) {
    if (model.paths.empty()) {
        throw ParseError("routine model '" + model.name + "' has no paths", 0);
    }
    std::set<std::string> names;
    for (const auto& p : model.paths) {
        if (!names.insert(p.name).second) {
            throw ParseError("routine model '" + model.name + "' repeats path name '" + p.name + "'", 0);
        }
        for (const auto& [var, value] : p.outcomes) {
            (void)value;
            if (p.initialized.contains(var)) {
                throw ParseError("path '" + p.name + "' lists '" + var + "' as both outcome and initialized", 0);
            }
        }
    }
}

std::vector<PathSpec> prune_paths(const RoutineModel& model, const Expr& cpost, const Domain& domain) {
    if (cpost.is_top()) {
        return model.paths;
    }
    std::vector<PathSpec> kept;
    for (const auto& path : model.paths) {
        // Outcome conflict: some value the path leaves behind contradicts it.
        // The other bindings may lie outside the domain, so it is widened to
        // cover them.
        Domain widened = domain;
        for (const auto& [var, value] : path.outcomes) {
            widened.lo = std::min(widened.lo, value);
            widened.hi = std::max(widened.hi, value);
        }
        bool conflict = false;
        for (const auto& [var, value] : path.outcomes) {
            if (!satisfiable_under(cpost, Environment{{var, value}}, widened)) {
                conflict = true;
                break;
            }
        }
        if (conflict) {
            continue;
        }
        // Direct application: the path condition contradicts the post-constraint
        // in the state the path leaves behind.
        Environment bound(path.outcomes.begin(), path.outcomes.end());
        if (satisfiable_under(Expr::all_of({path.constraint, cpost}), bound, domain)) {
            kept.push_back(path);
        }
    }
    return kept;
}

Expr path_guard(const PathSpec& path) {
    if (!path.constraint.is_top()) {
        return path.constraint;
    }
    std::vector<Expr> eqs;
    for (const auto& [var, value] : path.outcomes) {
        eqs.push_back(Expr::compare(var, CmpOp::Eq, value));
    }
    return Expr::all_of(std::move(eqs));
}

namespace {

/// Shared tail of both routes: given which paths can reach the use, split
/// the suspicious names.
QualifiedPostcondition summarize(const std::vector<const PathSpec*>& reaching,
                                 const std::set<std::string>& suspicious) {
    QualifiedPostcondition q;
    if (reaching.empty()) {
        q.must_init = suspicious;
        q.unreachable_use = true;
        return q;
    }
    for (const auto& name : suspicious) {
        std::vector<Expr> guards;
        for (const auto* p : reaching) {
            if (p->initialized.contains(name)) {
                guards.push_back(path_guard(*p));
            }
        }
        if (guards.size() == reaching.size()) {
            q.must_init.insert(name);
        } else if (!guards.empty()) {
            auto cond = Expr::any_of(std::move(guards));
            q.may_init.push_back({name, cond, cond.to_string()});
        }
    }
    return q;
}

}  // namespace

QualifiedPostcondition qualified_postcondition(const RoutineModel& model, const Expr& cpost,
                                               const std::set<std::string>& suspicious, const Domain& domain) {
    if (suspicious.empty()) {
        throw std::invalid_argument("qualified_postcondition needs at least one suspicious variable");
    }
    const auto surviving = prune_paths(model, cpost, domain);
    std::vector<const PathSpec*> reaching;
    for (const auto& p : surviving) {
        reaching.push_back(&p);
    }
    return summarize(reaching, suspicious);
}

std::vector<Execution> feasible_executions(const RoutineModel& model, const Expr& cpost, const Domain& domain) {
    std::vector<Execution> out;
    for (std::size_t pi = 0; pi < model.paths.size(); ++pi) {
        const auto& path = model.paths[pi];
        std::set<std::string> names = path.constraint.free_variables();
        const auto post_vars = cpost.free_variables();
        names.insert(post_vars.begin(), post_vars.end());
        std::vector<std::string> free;
        for (const auto& n : names) {
            if (!path.outcomes.contains(n)) {
                free.push_back(n);
            }
        }
        if (free.size() > kMaxFreeVariables) {
            throw CapacityError("path '" + path.name + "' needs " + std::to_string(free.size()) +
                                " enumerated variables; limit is " + std::to_string(kMaxFreeVariables));
        }

        Environment env;
        for (const auto& [var, value] : path.outcomes) {
            env[var] = value;
        }
        std::vector<std::int64_t> values(free.size(), domain.lo);
        while (true) {
            for (std::size_t k = 0; k < free.size(); ++k) {
                env[free[k]] = values[k];
            }
            if (path.constraint.evaluate(env) && cpost.evaluate(env)) {
                out.push_back({pi, env});
            }
            std::size_t k = 0;
            for (; k < free.size(); ++k) {
                if (values[k] < domain.hi) {
                    ++values[k];
                    break;
                }
                values[k] = domain.lo;
            }
            if (k == free.size()) {
                break;
            }
        }
    }
    return out;
}

QualifiedPostcondition brute_force_oracle(const RoutineModel& model, const Expr& cpost,
                                          const std::set<std::string>& suspicious, const Domain& domain) {
    const auto executions = feasible_executions(model, cpost, domain);

    // Intersect over executions, not paths, so nothing here depends on the
    // path-level reasoning the pruning rules use.
    std::optional<std::set<std::string>> always;
    std::set<std::string> sometimes;
    std::vector<bool> path_reaches(model.paths.size(), false);
    for (const auto& ex : executions) {
        const auto& init = model.paths[ex.path_index].initialized;
        path_reaches[ex.path_index] = true;
        std::set<std::string> here;
        for (const auto& name : suspicious) {
            if (init.contains(name)) {
                here.insert(name);
                sometimes.insert(name);
            }
        }
        if (!always) {
            always = here;
        } else {
            std::set<std::string> both;
            for (const auto& n : *always) {
                if (here.contains(n)) {
                    both.insert(n);
                }
            }
            always = std::move(both);
        }
    }

    QualifiedPostcondition q;
    if (!always) {
        q.must_init = suspicious;
        q.unreachable_use = true;
        return q;
    }
    q.must_init = *always;
    for (const auto& name : suspicious) {
        if (q.must_init.contains(name) || !sometimes.contains(name)) {
            continue;
        }
        std::vector<Expr> guards;
        for (std::size_t i = 0; i < model.paths.size(); ++i) {
            if (path_reaches[i] && model.paths[i].initialized.contains(name)) {
                guards.push_back(path_guard(model.paths[i]));
            }
        }
        auto cond = Expr::any_of(std::move(guards));
        q.may_init.push_back({name, cond, cond.to_string()});
    }
    return q;
}

// ---------------------------------------------------------------------------
// Fixture documents

RoutineModel routine_model_from_json(const nlohmann::json& j) {
    try {
        RoutineModel m;
        m.name = j.at("name").get<std::string>();
        if (j.contains("params")) {
            m.params = j.at("params").get<std::vector<std::string>>();
        }
        for (const auto& pj : j.at("paths")) {
            PathSpec p;
            p.name = pj.at("name").get<std::string>();
            const auto c = pj.find("constraint");
            if (c != pj.end() && !c->is_null()) {
                p.constraint = parse_constraint(c->get<std::string>());
            }
            if (pj.contains("outcomes")) {
                p.outcomes = pj.at("outcomes").get<std::map<std::string, std::int64_t>>();
            }
            if (pj.contains("initialized")) {
                for (const auto& n : pj.at("initialized")) {
                    p.initialized.insert(n.get<std::string>());
                }
            }
            m.paths.push_back(std::move(p));
        }
        validate(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("routine model: ") + e.what(), 0);
    }
}

nlohmann::json to_json(const RoutineModel& model) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : model.paths) {
        paths.push_back({{"name", p.name},
                         {"constraint", p.constraint.is_top() ? nlohmann::json(nullptr)
                                                              : nlohmann::json(p.constraint.to_string())},
                         {"outcomes", p.outcomes},
                         {"initialized", p.initialized}});
    }
    return {{"name", model.name}, {"params", model.params}, {"paths", std::move(paths)}};
}

RoutineModel load_routine_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open routine model " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("routine model ") + path.string() + ": " + e.what(), e.byte);
    }
    return routine_model_from_json(j);
}

nlohmann::json to_json(const QualifiedPostcondition& q) {
    nlohmann::json may = nlohmann::json::array();
    for (const auto& m : q.may_init) {
        may.push_back({{"name", m.name}, {"condition", m.condition_text}});
    }
    return {{"must_init", q.must_init}, {"may_init", std::move(may)}, {"unreachable_use", q.unreachable_use}};
}

}  // namespace ubitriage::constraint
