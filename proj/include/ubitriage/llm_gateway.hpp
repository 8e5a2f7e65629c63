#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ubitriage::llm {

/// One prompt/response exchange.
struct Turn {
    std::size_t index = 0;
    std::string prompt;
    std::string response;
    std::size_t prompt_tokens = 0;
    std::size_t response_tokens = 0;
    std::chrono::milliseconds elapsed{0};
};

struct ConversationId {
    std::string case_id;
    /// `convo1`, `convo2`, or an ablation label.
    std::string label;
    int run = 0;
    /// Distinguishes several Convo 2 sessions in one run (one per initializer).
    int part = 0;

    /// `case/label/run[/part]`
    [[nodiscard]] std::string key() const;
    /// `label-run[-part]`, used for transcript file names.
    [[nodiscard]] std::string file_stem() const;

    friend auto operator<=>(const ConversationId&, const ConversationId&) = default;
};

/// Ordered turns of one model session. Single owner; not shared between
/// threads.
struct Conversation {
    ConversationId id;
    std::string system_prompt;
    std::vector<Turn> turns;
    std::size_t max_turns = 8;

    [[nodiscard]] std::size_t total_tokens() const;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
};

enum class BackendKind { Replay, Http };

struct BackendConfig {
    BackendKind kind = BackendKind::Replay;
    std::string model = "gpt-4-0613";
    double temperature = 1.0;
    int max_response_tokens = 1024;
    std::string endpoint;
    std::string api_key;
    std::filesystem::path transcript_path;
    std::size_t max_turns = 8;
    RetryPolicy retry;
    /// Upper bound on concurrent requests to a non-deterministic backend.
    std::size_t max_in_flight = 4;

    /// Throws ConfigError.
    void validate() const;
};

struct Message {
    std::string role;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct Completion {
    std::string text;
    std::optional<std::size_t> prompt_tokens;
    std::optional<std::size_t> response_tokens;
};

/// A source of completions. Implementations must be safe to call from several
/// threads for distinct conversations.
class Backend {
public:
    virtual ~Backend() = default;

    /// Called when a conversation is opened. Throws SetupError when the
    /// backend cannot serve it.
    virtual void open(const ConversationId& id) { (void)id; }

    /// `messages` is the full history: system, alternating user/assistant,
    /// and the new user prompt last.
    virtual Completion complete(const ConversationId& id, std::size_t turn_index,
                                const std::vector<Message>& messages) = 0;

    /// Same input, same output. Deterministic backends bypass the response
    /// cache and the in-flight limit, and do not need repeated votes.
    [[nodiscard]] virtual bool deterministic() const { return false; }

    /// How many independent runs a deterministic backend has recorded for a
    /// case, if it knows.
    [[nodiscard]] virtual std::optional<int> recorded_runs(const std::string& case_id) const {
        (void)case_id;
        return std::nullopt;
    }

    [[nodiscard]] virtual std::string describe() const = 0;
};

/// Completion cache keyed by (model, full history digest).
class ResponseCache {
public:
    virtual ~ResponseCache() = default;
    virtual std::optional<std::string> get(const std::string& key) = 0;
    virtual void put(const std::string& key, const std::string& response) = 0;
};

/// Digest of the model name and every message, in order.
std::string history_digest(std::string_view model, const std::vector<Message>& messages);

/// ceil(bytes / 4). Reporting only.
std::size_t estimate_tokens(std::string_view text);

class Gateway {
public:
    Gateway(BackendConfig config, std::unique_ptr<Backend> backend, ResponseCache* cache = nullptr);

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Throws SetupError when the backend cannot serve `id`.
    Conversation open_conversation(std::string system_prompt, ConversationId id);

    /// Appends a turn and returns the response. Throws TurnCapError when the
    /// conversation already holds `max_turns` turns; backend errors propagate.
    std::string send_turn(Conversation& conv, const std::string& prompt);

    [[nodiscard]] const BackendConfig& config() const noexcept { return config_; }
    [[nodiscard]] Backend& backend() noexcept { return *backend_; }
    [[nodiscard]] const Backend& backend() const noexcept { return *backend_; }

    /// Completions actually requested from the backend.
    [[nodiscard]] std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
    [[nodiscard]] std::size_t cache_hits() const noexcept { return cache_hits_.load(); }

private:
    BackendConfig config_;
    std::unique_ptr<Backend> backend_;
    ResponseCache* cache_;

    std::mutex slots_mu_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;

    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

// ---------------------------------------------------------------------------
// Backends

/// Serves recorded responses. Each outgoing prompt must match the SHA-256
/// pinned for its turn.
///
/// Transcript documents (one per case, `*.json` under a directory, or a single
/// file):
///
///     {"case": "c1",
///      "conversations": [
///        {"label": "convo1", "run": 0, "part": 0,
///         "turns": [{"prompt_sha256": "...", "response": "..."}]}]}
class ReplayBackend : public Backend {
public:
    /// With `pin`, missing or stale digests are overwritten instead of
    /// raising DriftError; `save` writes them back.
    explicit ReplayBackend(const std::filesystem::path& transcripts, bool pin = false);

    void open(const ConversationId& id) override;
    Completion complete(const ConversationId& id, std::size_t turn_index,
                        const std::vector<Message>& messages) override;
    [[nodiscard]] bool deterministic() const override { return true; }
    [[nodiscard]] std::optional<int> recorded_runs(const std::string& case_id) const override;
    [[nodiscard]] std::string describe() const override { return "replay"; }

    /// Rewrites every transcript document that changed while pinning.
    void save() const;

private:
    struct RecordedTurn {
        std::string prompt_sha256;
        std::string response;
    };
    struct Document {
        std::filesystem::path path;
        std::string case_id;
        std::map<ConversationId, std::vector<RecordedTurn>> conversations;
        bool dirty = false;
    };

    bool pin_;
    mutable std::mutex mu_;
    std::vector<Document> docs_;
    std::map<std::string, std::size_t> by_case_;
};

/// OpenAI-compatible chat-completion client.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);

    Completion complete(const ConversationId& id, std::size_t turn_index,
                        const std::vector<Message>& messages) override;
    [[nodiscard]] std::string describe() const override { return "http"; }

    /// Request body for `messages`; exposed for wire-format tests.
    [[nodiscard]] std::string request_body(const std::vector<Message>& messages) const;

private:
    BackendConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

/// Builds the backend `config` selects. Throws ConfigError.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace ubitriage::llm
