#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ubitriage::corpus {

/// An exact slice of a source file holding one function definition and the
/// comment block directly above it.
struct FunctionDef {
    std::string name;
    std::string file;
    /// 1-based, inclusive. `start_line` is the first comment line when a
    /// leading comment block exists.
    std::int64_t start_line = 0;
    std::int64_t end_line = 0;
    std::string text;

    friend bool operator==(const FunctionDef&, const FunctionDef&) = default;
};

struct DefinitionLocation {
    std::string name;
    std::string file;
    std::int64_t start_line = 0;
    /// First line of the declarator (return type onwards).
    std::int64_t signature_line = 0;
    std::int64_t end_line = 0;

    friend bool operator==(const DefinitionLocation&, const DefinitionLocation&) = default;
};

struct BuildStats {
    std::size_t files_scanned = 0;
    std::size_t definitions_found = 0;
    std::vector<std::string> warnings;

    friend bool operator==(const BuildStats&, const BuildStats&) = default;
};

/// Immutable name -> definition index over the `.c`/`.h` files below a root.
class CorpusIndex {
public:
    CorpusIndex() = default;

    static CorpusIndex build(const std::filesystem::path& root);

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
    [[nodiscard]] const std::map<std::string, std::vector<DefinitionLocation>>& definitions() const noexcept {
        return defs_;
    }
    [[nodiscard]] const BuildStats& stats() const noexcept { return stats_; }

    /// Resolves `name`. With several definitions, prefers `hint_file`, then
    /// the candidate sharing the longest directory prefix with it, then the
    /// lexicographically smallest path.
    [[nodiscard]] FunctionDef extract_function(const std::string& name,
                                               const std::optional<std::string>& hint_file = std::nullopt) const;

    /// The definition whose declarator-to-closing-brace span contains `line`.
    [[nodiscard]] FunctionDef enclosing_function(const std::string& file, std::int64_t line) const;

    /// Re-reads the file and slices the location's lines.
    [[nodiscard]] FunctionDef load(const DefinitionLocation& loc) const;

    [[nodiscard]] nlohmann::json to_json() const;
    static CorpusIndex from_json(const nlohmann::json& j, const std::filesystem::path& root);

    friend bool operator==(const CorpusIndex& a, const CorpusIndex& b) {
        return a.defs_ == b.defs_ && a.stats_ == b.stats_;
    }

private:
    std::filesystem::path root_;
    std::map<std::string, std::vector<DefinitionLocation>> defs_;
    std::map<std::string, std::vector<DefinitionLocation>> by_file_;
    BuildStats stats_;

    void add(DefinitionLocation loc);
};

CorpusIndex build_index(const std::filesystem::path& root);

FunctionDef extract_function(const CorpusIndex& index, const std::string& name,
                             const std::optional<std::string>& hint_file = std::nullopt);

FunctionDef enclosing_function(const CorpusIndex& index, const std::string& file, std::int64_t line);

/// Scans one file's text. Exposed for tests; `file` is only copied into the
/// returned locations.
std::vector<DefinitionLocation> scan_definitions(const std::string& file, std::string_view text);

/// Index cache document: version, per-file size/mtime fingerprints and the
/// name -> (file, span) table.
void save_index_cache(const CorpusIndex& index, const std::filesystem::path& cache_path);

/// Loads the cache when every fingerprint still matches the tree, otherwise
/// rebuilds and rewrites it. `rebuilt` reports which happened.
CorpusIndex load_or_build_index(const std::filesystem::path& root, const std::filesystem::path& cache_path,
                                bool* rebuilt = nullptr);

}  // namespace ubitriage::corpus
