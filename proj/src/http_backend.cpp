#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ubitriage/error.hpp"
#include "ubitriage/llm_gateway.hpp"

#include <json.hpp>

#include <cmath>
#include <thread>

namespace ubitriage::llm {

namespace {

bool is_context_overflow(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_object()) {
        const auto& err = j["error"];
        if (err.value("code", nlohmann::json()).is_string() &&
            err["code"].get<std::string>() == "context_length_exceeded") {
            return true;
        }
        if (err.contains("message") && err["message"].is_string() &&
            err["message"].get<std::string>().find("maximum context length") != std::string::npos) {
            return true;
        }
    }
    return false;
}

std::string snippet(const std::string& body) {
    constexpr std::size_t kMax = 300;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    const auto& ep = config_.endpoint;
    const auto scheme_end = ep.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must start with http:// or https://: " + ep);
    }
    const auto scheme = ep.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
    }
    const auto path_start = ep.find('/', scheme_end + 3);
    scheme_host_port_ = ep.substr(0, path_start);
    std::string base = path_start == std::string::npos ? std::string() : ep.substr(path_start);
    while (!base.empty() && base.back() == '/') {
        base.pop_back();
    }
    const std::string suffix = "/chat/completions";
    if (base.size() >= suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
        path_ = base;
    } else {
        path_ = base + suffix;
    }
}

std::string HttpBackend::request_body(const std::vector<Message>& messages) const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    const nlohmann::json body = {{"model", config_.model},
                                 {"messages", std::move(msgs)},
                                 {"temperature", config_.temperature},
                                 {"max_tokens", config_.max_response_tokens}};
    return body.dump();
}

Completion HttpBackend::complete(const ConversationId& id, std::size_t turn_index,
                                 const std::vector<Message>& messages) {
    const auto body = request_body(messages);
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(180));
    client.set_write_timeout(std::chrono::seconds(30));
    const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

    auto backoff = config_.retry.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.attempts; ++attempt) {
        auto res = client.Post(path_, headers, body, "application/json");
        bool retryable = false;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            retryable = true;
        } else if (res->status == 200) {
            const auto j = nlohmann::json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
                throw BackendError("malformed completion for " + id.key() + " turn " + std::to_string(turn_index) +
                                   ": " + snippet(res->body));
            }
            const auto& msg = j["choices"][0].value("message", nlohmann::json::object());
            Completion c;
            c.text = msg.value("content", nlohmann::json("")).is_string() ? msg["content"].get<std::string>() : "";
            if (j.contains("usage") && j["usage"].is_object()) {
                const auto& u = j["usage"];
                if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_unsigned()) {
                    c.prompt_tokens = u["prompt_tokens"].get<std::size_t>();
                }
                if (u.contains("completion_tokens") && u["completion_tokens"].is_number_unsigned()) {
                    c.response_tokens = u["completion_tokens"].get<std::size_t>();
                }
            }
            return c;
        } else if (is_context_overflow(res->body)) {
            throw OverflowError("context window exceeded for " + id.key() + " turn " + std::to_string(turn_index));
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + snippet(res->body);
            retryable = true;
        } else {
            throw BackendError("HTTP " + std::to_string(res->status) + " for " + id.key() + ": " + snippet(res->body));
        }
        if (retryable && attempt < config_.retry.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<std::int64_t>(std::llround(static_cast<double>(backoff.count()) * config_.retry.multiplier)));
        }
    }
    throw BackendError("giving up on " + id.key() + " turn " + std::to_string(turn_index) + " after " +
                       std::to_string(config_.retry.attempts) + " attempts; last: " + last_error);
}

}  // namespace ubitriage::llm
