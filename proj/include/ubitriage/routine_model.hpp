#pragma once

#include "ubitriage/constraint_expr.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ubitriage::constraint {

/// One execution path through a routine: the condition under which it runs,
/// the integer values it leaves behind (`ret`, `err`, parameters) and the
/// variables it initializes.
struct PathSpec {
    std::string name;
    Expr constraint;
    std::map<std::string, std::int64_t> outcomes;
    std::set<std::string> initialized;

    friend bool operator==(const PathSpec&, const PathSpec&) = default;
};

struct RoutineModel {
    std::string name;
    std::vector<std::string> params;
    std::vector<PathSpec> paths;

    friend bool operator==(const RoutineModel&, const RoutineModel&) = default;
};

/// Throws ParseError when paths are empty, path names repeat, or a name is
/// both an outcome binding and an initialized variable on the same path.
void validate(const RoutineModel& model);

struct MayInit {
    std::string name;
    /// Parsed condition when it came from the core; empty for opaque text
    /// reported by a model.
    std::optional<Expr> condition;
    std::string condition_text;

    friend bool operator==(const MayInit&, const MayInit&) = default;
};

/// The routine's postcondition restricted to executions that reach the use.
struct QualifiedPostcondition {
    std::set<std::string> must_init;
    std::vector<MayInit> may_init;
    /// No path survives the post-constraint: the use cannot execute.
    bool unreachable_use = false;

    friend bool operator==(const QualifiedPostcondition&, const QualifiedPostcondition&) = default;
};

/// Keeps the paths compatible with `cpost`, in order. A path is dropped when
/// any single outcome binding `var == k` conjoined with `cpost` is
/// unsatisfiable, or when its constraint conjoined with `cpost` is
/// unsatisfiable with all of its outcome bindings held fixed. TOP keeps every
/// path.
std::vector<PathSpec> prune_paths(const RoutineModel& model, const Expr& cpost, const Domain& domain);

/// must_init / may_init over the surviving paths. A may_init condition is the
/// disjunction of the initializing paths' guards; a guard is the path
/// constraint, or its outcome equalities when the constraint is TOP.
QualifiedPostcondition qualified_postcondition(const RoutineModel& model, const Expr& cpost,
                                               const std::set<std::string>& suspicious, const Domain& domain);

/// One concrete run of a path: the path and a full variable assignment.
struct Execution {
    std::size_t path_index = 0;
    Environment env;
};

/// Every (path, assignment) pair whose path constraint and `cpost` both hold
/// once the path's outcome bindings are applied. No pruning rule is consulted.
std::vector<Execution> feasible_executions(const RoutineModel& model, const Expr& cpost, const Domain& domain);

/// Reference answer computed from `feasible_executions` alone.
QualifiedPostcondition brute_force_oracle(const RoutineModel& model, const Expr& cpost,
                                          const std::set<std::string>& suspicious, const Domain& domain);

/// The expression a may_init entry reports for one path.
Expr path_guard(const PathSpec& path);

RoutineModel routine_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoutineModel& model);
RoutineModel load_routine_model(const std::filesystem::path& path);

nlohmann::json to_json(const QualifiedPostcondition& q);

}  // namespace ubitriage::constraint
