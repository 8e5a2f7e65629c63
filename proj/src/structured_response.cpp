#include "ubitriage/structured_response.hpp"

#include "ubitriage/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ubitriage::orchestrator {

using nlohmann::json;

namespace {

/// Thrown internally when a document parses but has the wrong shape.
struct Unclassifiable {};

std::vector<std::string> string_list(const json& j) {
    if (!j.is_array()) {
        throw Unclassifiable{};
    }
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) {
            throw Unclassifiable{};
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

bool is_request_object(const json& j) {
    return j.is_object() && j.contains("type") && j["type"].is_string() && j.contains("name") &&
           j["name"].is_string();
}

RequestList requests_from(const json& arr) {
    RequestList out;
    for (const auto& e : arr) {
        if (!is_request_object(e)) {
            throw Unclassifiable{};
        }
        out.push_back({e["type"].get<std::string>(), e["name"].get<std::string>()});
    }
    return out;
}

std::string condition_text(const json& c) {
    if (c.is_null()) {
        return "";
    }
    if (c.is_string()) {
        return c.get<std::string>();
    }
    return c.dump();
}

ConvoTwoResult summary_from(const json& outer, const json& body) {
    ConvoTwoResult r;
    r.must_init = string_list(body.at("must_init"));
    if (body.contains("may_init") && !body["may_init"].is_null()) {
        const auto& may = body["may_init"];
        if (!may.is_array()) {
            throw Unclassifiable{};
        }
        for (const auto& e : may) {
            if (e.is_string()) {
                r.may_init.push_back({e.get<std::string>(), ""});
            } else if (e.is_object() && e.contains("name") && e["name"].is_string()) {
                r.may_init.push_back({e["name"].get<std::string>(), condition_text(e.value("condition", json()))});
            } else {
                throw Unclassifiable{};
            }
        }
    }
    const std::set<std::string> must(r.must_init.begin(), r.must_init.end());
    for (const auto& m : r.may_init) {
        if (must.contains(m.name)) {
            throw Unclassifiable{};
        }
    }
    if (outer.contains("ret") && outer["ret"].is_string()) {
        const auto status = outer["ret"].get<std::string>();
        if (status == "need_more_info") {
            r.status = ConvoTwoStatus::NeedMoreInfo;
        } else if (status != "success") {
            r.status = ConvoTwoStatus::Inconclusive;
            r.reason = "model reported '" + status + "'";
        }
    }
    return r;
}

ConvoOneResult initializer_from(const json& j) {
    if (!j.is_object()) {
        throw Unclassifiable{};
    }
    ConvoOneResult r;
    const auto init = j.value("initializer", json());
    if (init.is_string()) {
        r.initializer = init.get<std::string>();
    } else if (!init.is_null()) {
        throw Unclassifiable{};
    }
    r.initializer_callee = callee_of(r.initializer);
    if (j.contains("suspicious") && !j["suspicious"].is_null()) {
        r.suspicious = string_list(j["suspicious"]);
    }
    const auto post = j.value("postconstraint", json());
    if (post.is_string()) {
        r.postconstraint = post.get<std::string>();
    } else if (!post.is_null()) {
        throw Unclassifiable{};
    }
    return r;
}

bool is_initializer_object(const json& j) {
    return j.is_object() && (j.contains("postconstraint") || j.contains("initializer"));
}

InitializerList initializers_from(const json& j) {
    InitializerList out;
    auto add = [&](const json& e) {
        auto r = initializer_from(e);
        if (!r.initializer.empty()) {
            out.push_back(std::move(r));
        }
    };
    if (j.is_array()) {
        for (const auto& e : j) {
            add(e);
        }
    } else {
        add(j);
    }
    return out;
}

StructuredResponse classify(const json& j) {
    if (j.is_array()) {
        if (j.empty()) {
            return InitializerList{};
        }
        if (std::all_of(j.begin(), j.end(), is_request_object)) {
            return requests_from(j);
        }
        if (std::all_of(j.begin(), j.end(), is_initializer_object)) {
            return initializers_from(j);
        }
        throw Unclassifiable{};
    }
    if (!j.is_object()) {
        throw Unclassifiable{};
    }
    if (is_request_object(j)) {
        return RequestList{{j["type"].get<std::string>(), j["name"].get<std::string>()}};
    }
    const bool asks = (j.contains("ret") && j["ret"] == "need_more_info") ||
                      (j.contains("status") && j["status"] == "need_more_info");
    if (asks) {
        for (const char* key : {"response", "requests"}) {
            if (j.contains(key) && j[key].is_array()) {
                return requests_from(j[key]);
            }
        }
    }
    if (j.contains("must_init")) {
        return summary_from(j, j);
    }
    if (j.contains("response") && j["response"].is_object() && j["response"].contains("must_init")) {
        return summary_from(j, j["response"]);
    }
    if (is_initializer_object(j)) {
        return initializers_from(j);
    }
    throw Unclassifiable{};
}

/// End offset (exclusive) of the bracketed span starting at `start`, if the
/// brackets balance. Strings follow JSON quoting rules.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_string = true;
                break;
            case '{':
                stack.push_back('}');
                break;
            case '[':
                stack.push_back(']');
                break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) {
                    return std::nullopt;
                }
                stack.pop_back();
                if (stack.empty()) {
                    return i + 1;
                }
                break;
            default:
                break;
        }
    }
    return std::nullopt;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

}  // namespace

std::string strip_trailing_commas(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < text.size()) {
                out.push_back(text[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == ',') {
            std::size_t k = i + 1;
            while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k])) != 0) {
                ++k;
            }
            if (k < text.size() && (text[k] == '}' || text[k] == ']')) {
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

StructuredResponse parse_structured_response(std::string_view text) {
    struct Span {
        std::size_t start;
        std::size_t end;
    };
    std::vector<Span> spans;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '{' || text[i] == '[') {
            if (const auto end = balanced_end(text, i)) {
                spans.push_back({i, *end});
            }
        }
    }
    // Latest end first; for equal ends the outermost span wins.
    std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        return a.end != b.end ? a.end > b.end : a.start < b.start;
    });
    for (const auto& s : spans) {
        const auto doc = json::parse(strip_trailing_commas(text.substr(s.start, s.end - s.start)), nullptr, false);
        if (doc.is_discarded()) {
            continue;
        }
        try {
            return classify(doc);
        } catch (const Unclassifiable&) {
        } catch (const json::exception&) {
        }
    }
    throw ParseError("no structured document found in response", text.size());
}

std::string callee_of(std::string_view initializer) {
    static const std::set<std::string, std::less<>> kKeywords = {
        "if", "while", "for", "switch", "return", "sizeof", "do", "else", "case", "typeof", "__typeof__",
        "alignof", "_Alignof", "defined", "void", "int", "char", "long", "short", "unsigned", "signed",
        "struct", "union", "enum", "const", "volatile", "static", "inline"};

    // Drop an assignment target: the first lone `=` before any `(`.
    std::string_view rhs = initializer;
    for (std::size_t i = 0; i < initializer.size(); ++i) {
        const char c = initializer[i];
        if (c == '(') {
            break;
        }
        if (c == '=') {
            const char prev = i > 0 ? initializer[i - 1] : '\0';
            const char next = i + 1 < initializer.size() ? initializer[i + 1] : '\0';
            if (next != '=' && prev != '=' && prev != '!' && prev != '<' && prev != '>') {
                rhs = initializer.substr(i + 1);
                break;
            }
        }
    }

    std::string last;
    std::size_t i = 0;
    while (i < rhs.size()) {
        const char c = rhs[i];
        if (c == '"' || c == '\'') {
            // Skip literals so format strings never yield identifiers.
            const char quote = c;
            ++i;
            while (i < rhs.size() && rhs[i] != quote) {
                i += rhs[i] == '\\' ? 2 : 1;
            }
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
            while (i < rhs.size() && is_ident_char(rhs[i])) {
                ++i;
            }
            continue;
        }
        if (!is_ident_start(c)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < rhs.size() && is_ident_char(rhs[j])) {
            ++j;
        }
        std::string ident(rhs.substr(i, j - i));
        std::size_t k = j;
        while (k < rhs.size() && std::isspace(static_cast<unsigned char>(rhs[k])) != 0) {
            ++k;
        }
        if (!kKeywords.contains(ident)) {
            if (k < rhs.size() && rhs[k] == '(') {
                return ident;
            }
            last = std::move(ident);
        }
        i = j;
    }
    return last;
}

std::string_view to_string(ConvoTwoStatus status) {
    switch (status) {
        case ConvoTwoStatus::Success:
            return "success";
        case ConvoTwoStatus::NeedMoreInfo:
            return "need_more_info";
        case ConvoTwoStatus::Inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

json to_json(const ConvoOneResult& r) {
    return {{"initializer", r.initializer},
            {"suspicious", r.suspicious},
            {"postconstraint", r.postconstraint ? json(*r.postconstraint) : json(nullptr)}};
}

std::string request_document(const ConvoOneResult& r) {
    nlohmann::ordered_json doc;
    doc["initializer"] = r.initializer;
    doc["suspicious"] = r.suspicious;
    doc["postconstraint"] = r.postconstraint ? nlohmann::ordered_json(*r.postconstraint) : nlohmann::ordered_json();
    return doc.dump(1);
}

json to_json(const RequestList& r) {
    json out = json::array();
    for (const auto& q : r) {
        out.push_back({{"type", q.type}, {"name", q.name}});
    }
    return out;
}

json to_json(const ConvoTwoResult& r) {
    if (r.status == ConvoTwoStatus::NeedMoreInfo && !r.requests.empty()) {
        return {{"ret", "need_more_info"}, {"response", to_json(r.requests)}};
    }
    json may = json::array();
    for (const auto& m : r.may_init) {
        may.push_back({{"name", m.name}, {"condition", m.condition}});
    }
    return {{"ret", std::string(to_string(r.status))},
            {"response", {{"must_init", r.must_init}, {"may_init", std::move(may)}}}};
}

}  // namespace ubitriage::orchestrator
