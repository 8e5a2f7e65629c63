#include "ubitriage/llm_gateway.hpp"

#include "ubitriage/digest.hpp"
#include "ubitriage/error.hpp"

#include <json.hpp>

namespace ubitriage::llm {

std::string ConversationId::key() const {
    auto k = case_id + "/" + label + "/" + std::to_string(run);
    if (part != 0) {
        k += "/" + std::to_string(part);
    }
    return k;
}

std::string ConversationId::file_stem() const {
    auto s = label + "-" + std::to_string(run);
    if (part != 0) {
        s += "-" + std::to_string(part);
    }
    return s;
}

std::size_t Conversation::total_tokens() const {
    std::size_t total = 0;
    for (const auto& t : turns) {
        total += t.prompt_tokens + t.response_tokens;
    }
    return total;
}

void BackendConfig::validate() const {
    if (max_turns < 1) {
        throw ConfigError("max_turns must be at least 1");
    }
    if (max_response_tokens < 1) {
        throw ConfigError("max_response_tokens must be positive");
    }
    if (temperature < 0.0 || temperature > 2.0) {
        throw ConfigError("temperature must lie in [0, 2]");
    }
    if (retry.attempts < 1) {
        throw ConfigError("retry attempts must be at least 1");
    }
    if (max_in_flight < 1) {
        throw ConfigError("in-flight limit must be at least 1");
    }
    if (kind == BackendKind::Http) {
        if (endpoint.empty()) {
            throw ConfigError("http backend needs an endpoint");
        }
        if (api_key.empty()) {
            throw ConfigError("http backend needs an API key (set LLIFT_API_KEY)");
        }
    } else if (transcript_path.empty()) {
        throw ConfigError("replay backend needs a transcript path");
    }
}

std::string history_digest(std::string_view model, const std::vector<Message>& messages) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& m : messages) {
        doc.push_back({m.role, m.content});
    }
    return sha256_hex(std::string(model) + "\n" + doc.dump());
}

std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;
}

Gateway::Gateway(BackendConfig config, std::unique_ptr<Backend> backend, ResponseCache* cache)
    : config_(std::move(config)), backend_(std::move(backend)), cache_(cache) {
    if (!backend_) {
        throw ConfigError("gateway needs a backend");
    }
    if (config_.max_turns < 1 || config_.max_in_flight < 1) {
        throw ConfigError("max_turns and the in-flight limit must be at least 1");
    }
}

Conversation Gateway::open_conversation(std::string system_prompt, ConversationId id) {
    backend_->open(id);
    Conversation conv;
    conv.id = std::move(id);
    conv.system_prompt = std::move(system_prompt);
    conv.max_turns = config_.max_turns;
    return conv;
}

std::string Gateway::send_turn(Conversation& conv, const std::string& prompt) {
    if (conv.turns.size() >= conv.max_turns) {
        throw TurnCapError("conversation " + conv.id.key() + " reached the cap of " +
                           std::to_string(conv.max_turns) + " turns");
    }

    std::vector<Message> messages;
    messages.reserve(conv.turns.size() * 2 + 2);
    messages.push_back({"system", conv.system_prompt});
    for (const auto& t : conv.turns) {
        messages.push_back({"user", t.prompt});
        messages.push_back({"assistant", t.response});
    }
    messages.push_back({"user", prompt});

    const bool deterministic = backend_->deterministic();
    const auto started = std::chrono::steady_clock::now();

    Completion completion;
    std::optional<std::string> cached;
    std::string key;
    if (cache_ != nullptr && !deterministic) {
        key = history_digest(config_.model, messages);
        cached = cache_->get(key);
    }
    if (cached) {
        ++cache_hits_;
        completion.text = std::move(*cached);
    } else {
        if (!deterministic) {
            std::unique_lock lock(slots_mu_);
            slots_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
            ++in_flight_;
        }
        struct Release {
            Gateway* g;
            bool active;
            ~Release() {
                if (active) {
                    {
                        std::lock_guard lock(g->slots_mu_);
                        --g->in_flight_;
                    }
                    g->slots_cv_.notify_one();
                }
            }
        } release{this, !deterministic};

        ++backend_calls_;
        completion = backend_->complete(conv.id, conv.turns.size(), messages);
        if (cache_ != nullptr && !deterministic) {
            cache_->put(key, completion.text);
        }
    }

    Turn turn;
    turn.index = conv.turns.size();
    turn.prompt = prompt;
    turn.response = completion.text;
    turn.prompt_tokens = completion.prompt_tokens.value_or(estimate_tokens(prompt));
    turn.response_tokens = completion.response_tokens.value_or(estimate_tokens(completion.text));
    turn.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    conv.turns.push_back(std::move(turn));
    return conv.turns.back().response;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.kind == BackendKind::Http) {
        return std::make_unique<HttpBackend>(config);
    }
    return std::make_unique<ReplayBackend>(config.transcript_path);
}

}  // namespace ubitriage::llm
