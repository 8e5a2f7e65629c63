#include "ubitriage/prompt_pack.hpp"

#include "ubitriage/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ubitriage::orchestrator {

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read prompt file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

const std::vector<std::string>& PromptPack::required_templates() {
    static const std::vector<std::string> kNames = {
        "system",          "few_shot",        "convo1_analysis", "convo1_validate", "convo1_structured",
        "convo2_seed",     "convo2_supply",   "convo2_proceed",  "convo2_validate", "convo2_structured",
        "repair",          "zero_step",       "one_step"};
    return kNames;
}

PromptPack PromptPack::load(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("prompt manifest " + manifest_path.string() + ": " + e.what());
    }

    PromptPack pack;
    try {
        pack.name_ = manifest.at("name").get<std::string>();
        pack.version_ = manifest.at("version").get<std::string>();
        for (const auto& [key, file] : manifest.at("templates").items()) {
            pack.templates_[key] = read_text(dir / file.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("prompt manifest " + manifest_path.string() + ": " + e.what());
    }
    for (const auto& req : required_templates()) {
        if (!pack.has(req)) {
            throw ConfigError("prompt pack " + dir.string() + " lacks template '" + req + "'");
        }
    }
    return pack;
}

bool PromptPack::has(std::string_view name) const {
    return templates_.find(name) != templates_.end();
}

std::string PromptPack::render(std::string_view name, const Slots& slots) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw ConfigError("unknown prompt template '" + std::string(name) + "'");
    }
    const std::string& tpl = it->second;
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (true) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos);
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string::npos) {
            throw ConfigError("unterminated placeholder in template '" + std::string(name) + "'");
        }
        out.append(tpl, pos, open - pos);
        const std::string_view slot(tpl.data() + open + 2, close - open - 2);
        const auto value = slots.find(slot);
        if (value == slots.end()) {
            throw ConfigError("template '" + std::string(name) + "' needs slot '" + std::string(slot) + "'");
        }
        out += value->second;
        pos = close + 2;
    }
    return out;
}

}  // namespace ubitriage::orchestrator
