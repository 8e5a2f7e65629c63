#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ubitriage::report {

/// One static-analysis suspect: a variable that may be read before it is
/// written, the function that reads it, and where.
struct BugReport {
    std::string id;
    /// Opaque source spelling; may carry a field path such as `cap_rid.softCap`.
    std::string variable;
    std::string caller;
    /// Path relative to the corpus root.
    std::string file;
    std::int64_t line = 0;
    /// Fields the producer emitted that we do not interpret. Kept for round trips.
    nlohmann::json extra = nlohmann::json::object();

    friend bool operator==(const BugReport&, const BugReport&) = default;
};

/// Parses a report document: a single JSON array of case objects.
///
/// Throws ParseError (with byte offset) on malformed JSON and SchemaError
/// (naming the field and record index) on records with missing or invalid
/// fields or duplicate ids.
std::vector<BugReport> parse_reports(std::string_view text);

std::vector<BugReport> parse_report_file(const std::filesystem::path& path);

nlohmann::json to_json(const BugReport& report);

std::string serialize_reports(const std::vector<BugReport>& reports);

}  // namespace ubitriage::report
