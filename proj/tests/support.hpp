#pragma once

#include "ubitriage/llm_gateway.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path fixtures() { return UBITRIAGE_FIXTURES; }
inline std::filesystem::path default_pack() { return UBITRIAGE_DEFAULT_PACK; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ubitriage-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Backend driven by a callback. Records every history it is sent.
class ScriptedBackend : public ubitriage::llm::Backend {
public:
    using Script = std::function<std::string(const ubitriage::llm::ConversationId&, std::size_t,
                                             const std::vector<ubitriage::llm::Message>&)>;

    explicit ScriptedBackend(Script script, bool deterministic = false, std::optional<int> runs = std::nullopt)
        : script_(std::move(script)), deterministic_(deterministic), runs_(runs) {}

    ubitriage::llm::Completion complete(const ubitriage::llm::ConversationId& id, std::size_t turn_index,
                                        const std::vector<ubitriage::llm::Message>& messages) override {
        {
            std::lock_guard lock(mu_);
            calls.push_back({id, turn_index, messages});
        }
        return {script_(id, turn_index, messages), std::nullopt, std::nullopt};
    }

    [[nodiscard]] bool deterministic() const override { return deterministic_; }
    [[nodiscard]] std::optional<int> recorded_runs(const std::string&) const override { return runs_; }
    [[nodiscard]] std::string describe() const override { return "scripted"; }

    struct Call {
        ubitriage::llm::ConversationId id;
        std::size_t turn;
        std::vector<ubitriage::llm::Message> messages;
    };
    std::vector<Call> calls;

private:
    Script script_;
    bool deterministic_;
    std::optional<int> runs_;
    std::mutex mu_;
};

}  // namespace testsupport
