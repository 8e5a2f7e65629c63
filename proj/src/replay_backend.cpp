#include "ubitriage/digest.hpp"
#include "ubitriage/error.hpp"
#include "ubitriage/llm_gateway.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ubitriage::llm {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SetupError("cannot open transcript " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ReplayBackend::ReplayBackend(const std::filesystem::path& transcripts, bool pin) : pin_(pin) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(transcripts)) {
        for (const auto& entry : std::filesystem::directory_iterator(transcripts)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (std::filesystem::is_regular_file(transcripts)) {
        files.push_back(transcripts);
    } else {
        throw SetupError("transcript path does not exist: " + transcripts.string());
    }

    for (const auto& file : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(file));
        } catch (const nlohmann::json::parse_error& e) {
            throw SetupError("transcript " + file.string() + " is not valid JSON: " + e.what());
        }
        Document doc;
        doc.path = file;
        try {
            doc.case_id = j.at("case").get<std::string>();
            for (const auto& cj : j.at("conversations")) {
                ConversationId id;
                id.case_id = doc.case_id;
                id.label = cj.at("label").get<std::string>();
                id.run = cj.value("run", 0);
                id.part = cj.value("part", 0);
                std::vector<RecordedTurn> turns;
                for (const auto& tj : cj.at("turns")) {
                    turns.push_back({tj.value("prompt_sha256", std::string()), tj.at("response").get<std::string>()});
                }
                if (!doc.conversations.emplace(id, std::move(turns)).second) {
                    throw SetupError("transcript " + file.string() + " repeats conversation " + id.key());
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw SetupError("transcript " + file.string() + ": " + e.what());
        }
        if (by_case_.contains(doc.case_id)) {
            throw SetupError("case '" + doc.case_id + "' appears in more than one transcript document");
        }
        by_case_[doc.case_id] = docs_.size();
        docs_.push_back(std::move(doc));
    }
}

void ReplayBackend::open(const ConversationId& id) {
    std::lock_guard lock(mu_);
    const auto it = by_case_.find(id.case_id);
    if (it == by_case_.end()) {
        throw SetupError("no recorded transcript for case '" + id.case_id + "'");
    }
    if (!docs_[it->second].conversations.contains(id)) {
        throw SetupError("no recorded conversation " + id.key());
    }
}

Completion ReplayBackend::complete(const ConversationId& id, std::size_t turn_index,
                                   const std::vector<Message>& messages) {
    std::lock_guard lock(mu_);
    const auto it = by_case_.find(id.case_id);
    if (it == by_case_.end()) {
        throw SetupError("no recorded transcript for case '" + id.case_id + "'");
    }
    auto& doc = docs_[it->second];
    const auto conv = doc.conversations.find(id);
    if (conv == doc.conversations.end()) {
        throw SetupError("no recorded conversation " + id.key());
    }
    if (turn_index >= conv->second.size()) {
        throw BackendError("recorded conversation " + id.key() + " has no turn " + std::to_string(turn_index));
    }
    auto& turn = conv->second[turn_index];
    const auto digest = sha256_hex(messages.empty() ? std::string() : messages.back().content);
    if (digest != turn.prompt_sha256) {
        if (!pin_) {
            throw DriftError("prompt for " + id.key() + " turn " + std::to_string(turn_index) +
                                 " no longer matches the recording",
                             turn_index);
        }
        turn.prompt_sha256 = digest;
        doc.dirty = true;
    }
    return {turn.response, std::nullopt, std::nullopt};
}

std::optional<int> ReplayBackend::recorded_runs(const std::string& case_id) const {
    std::lock_guard lock(mu_);
    const auto it = by_case_.find(case_id);
    if (it == by_case_.end()) {
        return std::nullopt;
    }
    std::set<int> runs;
    for (const auto& [id, turns] : docs_[it->second].conversations) {
        (void)turns;
        runs.insert(id.run);
    }
    return static_cast<int>(runs.size());
}

void ReplayBackend::save() const {
    std::lock_guard lock(mu_);
    for (const auto& doc : docs_) {
        if (!doc.dirty) {
            continue;
        }
        nlohmann::json convs = nlohmann::json::array();
        for (const auto& [id, turns] : doc.conversations) {
            nlohmann::json tj = nlohmann::json::array();
            for (const auto& t : turns) {
                tj.push_back({{"prompt_sha256", t.prompt_sha256}, {"response", t.response}});
            }
            nlohmann::json cj = {{"label", id.label}, {"run", id.run}};
            if (id.part != 0) {
                cj["part"] = id.part;
            }
            cj["turns"] = std::move(tj);
            convs.push_back(std::move(cj));
        }
        const nlohmann::json out = {{"case", doc.case_id}, {"conversations", std::move(convs)}};
        std::ofstream os(doc.path, std::ios::binary | std::ios::trunc);
        os << out.dump(2) << "\n";
        if (!os) {
            throw StoreError("cannot write transcript " + doc.path.string());
        }
    }
}

}  // namespace ubitriage::llm
