#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ubitriage::orchestrator {

/// A model's request for more context. Only `function_def` is honored.
struct InfoRequest {
    std::string type;
    std::string name;

    friend bool operator==(const InfoRequest&, const InfoRequest&) = default;
};

struct MayInitEntry {
    std::string name;
    /// Opaque text as the model wrote it.
    std::string condition;

    friend bool operator==(const MayInitEntry&, const MayInitEntry&) = default;
};

/// One initializer identified for the suspicious variable, with the
/// constraint guarding the use.
struct ConvoOneResult {
    /// Call-site text, e.g. `ret = sscanf(str, "%d", &a)`.
    std::string initializer;
    std::string initializer_callee;
    std::vector<std::string> suspicious;
    std::optional<std::string> postconstraint;

    friend bool operator==(const ConvoOneResult&, const ConvoOneResult&) = default;
};

/// Zero entries means the caller has no initializer for the variable.
using InitializerList = std::vector<ConvoOneResult>;

enum class ConvoTwoStatus { Success, NeedMoreInfo, Inconclusive };

struct ConvoTwoResult {
    ConvoTwoStatus status = ConvoTwoStatus::Success;
    std::vector<std::string> must_init;
    std::vector<MayInitEntry> may_init;
    std::vector<InfoRequest> requests;
    /// Why the result is inconclusive.
    std::string reason;

    friend bool operator==(const ConvoTwoResult&, const ConvoTwoResult&) = default;
};

using RequestList = std::vector<InfoRequest>;

using StructuredResponse = std::variant<InitializerList, ConvoTwoResult, RequestList>;

/// Finds the last well-formed, classifiable JSON document in `text`.
/// Trailing commas before `}` or `]` are tolerated. Classification:
/// `type` entries are requests (also `{"ret": "need_more_info", "response": [...]}`);
/// `must_init`, at top level or under `response`, is a summary;
/// `postconstraint` or `initializer` is an initializer list.
/// Throws ParseError when nothing qualifies.
StructuredResponse parse_structured_response(std::string_view text);

/// Removes commas that directly precede a closing bracket, outside strings.
std::string strip_trailing_commas(std::string_view json_text);

/// Name of the function an initializer call-site invokes: the first
/// non-keyword identifier followed by `(` after any `lhs =`, else the last
/// identifier. Empty when there is none.
std::string callee_of(std::string_view initializer);

std::string_view to_string(ConvoTwoStatus status);

nlohmann::json to_json(const ConvoOneResult& r);
/// The request document sent to the model, fields in reading order.
std::string request_document(const ConvoOneResult& r);
nlohmann::json to_json(const ConvoTwoResult& r);
nlohmann::json to_json(const RequestList& r);

}  // namespace ubitriage::orchestrator
