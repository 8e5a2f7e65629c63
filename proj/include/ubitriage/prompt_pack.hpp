#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ubitriage::orchestrator {

/// Slot values for one rendering, keyed by slot name.
using Slots = std::map<std::string, std::string, std::less<>>;

/// Directory of prompt templates plus `manifest.json`:
///
///     {"name": "default", "version": "1.2",
///      "templates": {"convo1_analysis": "convo1_analysis.txt", ...}}
///
/// Templates use `{{slot}}` placeholders.
class PromptPack {
public:
    /// Throws ConfigError when the manifest or a listed file is missing or
    /// a required template is absent.
    static PromptPack load(const std::filesystem::path& dir);

    /// Throws ConfigError for an unknown template or a placeholder without a
    /// value. Extra slot values are ignored.
    [[nodiscard]] std::string render(std::string_view name, const Slots& slots = {}) const;

    [[nodiscard]] bool has(std::string_view name) const;
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const std::string& version() const noexcept { return version_; }

    /// Templates every pack must provide.
    static const std::vector<std::string>& required_templates();

private:
    std::string name_;
    std::string version_;
    std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace ubitriage::orchestrator
