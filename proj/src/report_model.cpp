#include "ubitriage/report_model.hpp"

#include "ubitriage/error.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ubitriage::report {

namespace {

constexpr std::array<std::string_view, 5> kRequiredFields = {"id", "variable", "caller", "file", "line"};

std::string required_string(const nlohmann::json& record, const char* field, std::size_t index) {
    auto it = record.find(field);
    if (it == record.end()) {
        throw SchemaError(field, index, "is missing");
    }
    if (!it->is_string()) {
        throw SchemaError(field, index, "must be a string");
    }
    auto value = it->get<std::string>();
    if (value.empty()) {
        throw SchemaError(field, index, "must not be empty");
    }
    return value;
}

BugReport parse_record(const nlohmann::json& record, std::size_t index) {
    if (!record.is_object()) {
        throw SchemaError("<record>", index, "is not an object");
    }
    BugReport out;
    out.id = required_string(record, "id", index);
    out.variable = required_string(record, "variable", index);
    out.caller = required_string(record, "caller", index);
    out.file = required_string(record, "file", index);

    auto line = record.find("line");
    if (line == record.end()) {
        throw SchemaError("line", index, "is missing");
    }
    if (!line->is_number_integer()) {
        throw SchemaError("line", index, "must be an integer");
    }
    out.line = line->get<std::int64_t>();
    if (out.line < 1) {
        throw SchemaError("line", index, "must be >= 1");
    }

    for (const auto& [key, value] : record.items()) {
        bool known = false;
        for (auto field : kRequiredFields) {
            known = known || key == field;
        }
        if (!known) {
            out.extra[key] = value;
        }
    }
    return out;
}

}  // namespace

std::vector<BugReport> parse_reports(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed report document: ") + e.what(), e.byte);
    }
    if (!doc.is_array()) {
        throw ParseError("report document must be a JSON array of case objects", 0);
    }

    std::vector<BugReport> reports;
    reports.reserve(doc.size());
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        auto r = parse_record(doc[i], i);
        auto [it, inserted] = seen.emplace(r.id, i);
        if (!inserted) {
            throw SchemaError("id", i, "duplicates record " + std::to_string(it->second) + " ('" + r.id + "')");
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

std::vector<BugReport> parse_report_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open report file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_reports(buf.str());
}

nlohmann::json to_json(const BugReport& report) {
    nlohmann::json j = report.extra.is_object() ? report.extra : nlohmann::json::object();
    j["id"] = report.id;
    j["variable"] = report.variable;
    j["caller"] = report.caller;
    j["file"] = report.file;
    j["line"] = report.line;
    return j;
}

std::string serialize_reports(const std::vector<BugReport>& reports) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : reports) {
        doc.push_back(to_json(r));
    }
    return doc.dump(2) + "\n";
}

}  // namespace ubitriage::report
