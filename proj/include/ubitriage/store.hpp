#pragma once

#include "ubitriage/llm_gateway.hpp"
#include "ubitriage/orchestrator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ubitriage::store {

struct RunSummary {
    int run = 0;
    std::string decision;
    std::string reason;
    std::size_t turns = 0;
    std::size_t tokens = 0;
    std::vector<std::string> initializers;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// One line of `verdicts.jsonl`.
struct VerdictRecord {
    std::string batch;
    std::string case_id;
    std::string decision;
    std::string reason;
    std::vector<std::string> votes;
    std::vector<RunSummary> runs;
    std::vector<std::string> suspicious;
    std::vector<std::string> must_init;
    std::vector<orchestrator::MayInitEntry> may_init;
    bool unreachable_use = false;
    bool merged = false;
    std::vector<std::string> warnings;
    /// Store-relative transcript paths.
    std::vector<std::string> transcripts;
    std::size_t turns = 0;
    std::size_t tokens = 0;
    std::string backend;
    std::string model;
    std::string pack_version;
    std::string recorded_at;

    friend bool operator==(const VerdictRecord&, const VerdictRecord&) = default;
};

nlohmann::json to_json(const VerdictRecord& r);
/// Throws ParseError.
VerdictRecord verdict_from_json(const nlohmann::json& j);

struct RecordContext {
    std::string batch;
    std::string backend;
    std::string model;
    std::string pack_version;
    std::string recorded_at;
};

VerdictRecord make_record(const orchestrator::CaseVerdict& v, const RecordContext& ctx,
                          std::vector<std::string> transcripts);

/// UTC ISO-8601 time, second precision.
std::string utc_timestamp();

/// Fixed timestamp used when runs must be reproducible.
inline constexpr const char* kEpochTimestamp = "1970-01-01T00:00:00Z";

struct BatchStats {
    std::size_t cases = 0;
    std::map<std::string, std::size_t> decisions;
    std::size_t turn_max = 0;
    std::uint64_t turn_sum = 0;
    std::uint64_t turn_square_sum = 0;
    std::size_t total_tokens = 0;

    /// 0 for an empty batch.
    [[nodiscard]] double turn_mean() const;
    /// Population variance; 0 for an empty batch.
    [[nodiscard]] double turn_variance() const;

    friend bool operator==(const BatchStats&, const BatchStats&) = default;
};

nlohmann::json to_json(const BatchStats& s);

/// Per-conversation transcript text; deterministic (no timings).
std::string render_transcript(const llm::Conversation& conv);

/// Store directory:
///
///     verdicts.jsonl
///     transcripts/<case>/<convo>-<run>[-<part>].txt
///     cache/
///
/// Appends are serialized; one record per (case, batch).
class Store {
public:
    /// Creates the layout when absent. Throws StoreError on unreadable or
    /// malformed existing records.
    explicit Store(std::filesystem::path root);

    /// Returns the record's 0-based position. Throws DuplicateRecordError or
    /// StoreError.
    std::size_t append_verdict(const VerdictRecord& record);

    /// Writes one file per conversation and returns store-relative paths.
    std::vector<std::string> write_transcripts(const std::vector<llm::Conversation>& conversations);

    [[nodiscard]] std::vector<VerdictRecord> read_verdicts() const;

    /// Statistics for `batch`, or for every record when absent. Throws
    /// NotFoundError for a batch with no records.
    [[nodiscard]] BatchStats batch_stats(const std::optional<std::string>& batch = std::nullopt) const;

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
    [[nodiscard]] std::filesystem::path verdicts_path() const { return root_ / "verdicts.jsonl"; }
    [[nodiscard]] std::filesystem::path cache_dir() const { return root_ / "cache"; }

private:
    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::set<std::pair<std::string, std::string>> keys_;
    std::size_t count_ = 0;
};

/// Response cache kept as one file per key under a directory.
class DirectoryResponseCache : public llm::ResponseCache {
public:
    explicit DirectoryResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) override;
    void put(const std::string& key, const std::string& response) override;

private:
    std::filesystem::path dir_;
    std::mutex mu_;
};

}  // namespace ubitriage::store
