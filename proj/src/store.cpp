#include "ubitriage/store.hpp"

#include "ubitriage/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace ubitriage::store {

using nlohmann::json;

namespace {

void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw StoreError("write to " + path.string() + " failed: " + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

/// Write to a temporary sibling and rename over the target.
void replace_file(const std::filesystem::path& path, const std::string& data) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << data;
        if (!out) {
            throw StoreError("cannot write " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw StoreError("cannot rename " + tmp + ": " + ec.message());
    }
}

std::string safe_component(const std::string& s) {
    std::string out;
    for (const char c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || out == "." || out == "..") {
        out = "_" + out;
    }
    return out;
}

}  // namespace

json to_json(const VerdictRecord& r) {
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back({{"run", run.run},
                        {"decision", run.decision},
                        {"reason", run.reason},
                        {"turns", run.turns},
                        {"tokens", run.tokens},
                        {"initializers", run.initializers}});
    }
    json may = json::array();
    for (const auto& m : r.may_init) {
        may.push_back({{"name", m.name}, {"condition", m.condition}});
    }
    return {{"batch", r.batch},
            {"case", r.case_id},
            {"decision", r.decision},
            {"reason", r.reason},
            {"votes", r.votes},
            {"runs", std::move(runs)},
            {"suspicious", r.suspicious},
            {"must_init", r.must_init},
            {"may_init", std::move(may)},
            {"unreachable_use", r.unreachable_use},
            {"merged", r.merged},
            {"warnings", r.warnings},
            {"transcripts", r.transcripts},
            {"turns", r.turns},
            {"tokens", r.tokens},
            {"backend", r.backend},
            {"model", r.model},
            {"pack_version", r.pack_version},
            {"recorded_at", r.recorded_at}};
}

VerdictRecord verdict_from_json(const json& j) {
    try {
        VerdictRecord r;
        r.batch = j.at("batch").get<std::string>();
        r.case_id = j.at("case").get<std::string>();
        r.decision = j.at("decision").get<std::string>();
        r.reason = j.at("reason").get<std::string>();
        r.votes = j.at("votes").get<std::vector<std::string>>();
        for (const auto& rj : j.at("runs")) {
            RunSummary s;
            s.run = rj.at("run").get<int>();
            s.decision = rj.at("decision").get<std::string>();
            s.reason = rj.at("reason").get<std::string>();
            s.turns = rj.at("turns").get<std::size_t>();
            s.tokens = rj.at("tokens").get<std::size_t>();
            s.initializers = rj.at("initializers").get<std::vector<std::string>>();
            r.runs.push_back(std::move(s));
        }
        r.suspicious = j.at("suspicious").get<std::vector<std::string>>();
        r.must_init = j.at("must_init").get<std::vector<std::string>>();
        for (const auto& mj : j.at("may_init")) {
            r.may_init.push_back({mj.at("name").get<std::string>(), mj.at("condition").get<std::string>()});
        }
        r.unreachable_use = j.at("unreachable_use").get<bool>();
        r.merged = j.at("merged").get<bool>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.transcripts = j.at("transcripts").get<std::vector<std::string>>();
        r.turns = j.at("turns").get<std::size_t>();
        r.tokens = j.at("tokens").get<std::size_t>();
        r.backend = j.at("backend").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.pack_version = j.at("pack_version").get<std::string>();
        r.recorded_at = j.at("recorded_at").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("verdict record: ") + e.what(), 0);
    }
}

VerdictRecord make_record(const orchestrator::CaseVerdict& v, const RecordContext& ctx,
                          std::vector<std::string> transcripts) {
    VerdictRecord r;
    r.batch = ctx.batch;
    r.case_id = v.case_id;
    r.decision = std::string(orchestrator::to_string(v.decision));
    r.reason = v.reason;
    for (auto d : v.votes) {
        r.votes.emplace_back(orchestrator::to_string(d));
    }
    for (const auto& run : v.runs) {
        r.runs.push_back({run.run, std::string(orchestrator::to_string(run.decision)), run.reason, run.turns,
                          run.tokens, run.initializers});
    }
    r.suspicious.assign(v.suspicious.begin(), v.suspicious.end());
    r.must_init.assign(v.qualified.must_init.begin(), v.qualified.must_init.end());
    for (const auto& m : v.qualified.may_init) {
        r.may_init.push_back({m.name, m.condition_text});
    }
    r.unreachable_use = v.qualified.unreachable_use;
    r.merged = v.merged;
    r.warnings = v.warnings;
    r.transcripts = std::move(transcripts);
    r.turns = v.total_turns;
    r.tokens = v.total_tokens;
    r.backend = ctx.backend;
    r.model = ctx.model;
    r.pack_version = ctx.pack_version;
    r.recorded_at = ctx.recorded_at;
    return r;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double BatchStats::turn_mean() const {
    return cases == 0 ? 0.0 : static_cast<double>(turn_sum) / static_cast<double>(cases);
}

double BatchStats::turn_variance() const {
    if (cases == 0) {
        return 0.0;
    }
    // n * sum(x^2) - (sum x)^2 is exact in integers; divide once at the end.
    const auto n = static_cast<long double>(cases);
    const long double num =
        static_cast<long double>(cases * turn_square_sum) - static_cast<long double>(turn_sum * turn_sum);
    return static_cast<double>(num / (n * n));
}

json to_json(const BatchStats& s) {
    return {{"cases", s.cases},
            {"decisions", s.decisions},
            {"turn_mean", s.turn_mean()},
            {"turn_max", s.turn_max},
            {"turn_variance", s.turn_variance()},
            {"total_tokens", s.total_tokens}};
}

std::string render_transcript(const llm::Conversation& conv) {
    std::ostringstream out;
    out << "=== conversation " << conv.id.key() << "\n";
    out << "=== system\n" << conv.system_prompt << "\n";
    for (const auto& t : conv.turns) {
        out << "=== turn " << t.index << " prompt (" << t.prompt_tokens << " tokens)\n" << t.prompt << "\n";
        out << "=== turn " << t.index << " response (" << t.response_tokens << " tokens)\n" << t.response << "\n";
    }
    out << "=== end (" << conv.turns.size() << " turns, " << conv.total_tokens() << " tokens)\n";
    return out.str();
}

Store::Store(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "transcripts", ec);
    if (!ec) {
        std::filesystem::create_directories(root_ / "cache", ec);
    }
    if (ec) {
        throw StoreError("cannot create store at " + root_.string() + ": " + ec.message());
    }
    for (const auto& r : read_verdicts()) {
        keys_.insert({r.case_id, r.batch});
        ++count_;
    }
}

std::size_t Store::append_verdict(const VerdictRecord& record) {
    std::lock_guard lock(mu_);
    if (keys_.contains({record.case_id, record.batch})) {
        throw DuplicateRecordError("case '" + record.case_id + "' already has a verdict in batch '" + record.batch +
                                   "'");
    }
    const auto path = verdicts_path();
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw StoreError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    try {
        write_all(fd, to_json(record).dump() + "\n", path);
        if (::fsync(fd) != 0) {
            throw StoreError("fsync of " + path.string() + " failed: " + std::strerror(errno));
        }
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    keys_.insert({record.case_id, record.batch});
    return count_++;
}

std::vector<std::string> Store::write_transcripts(const std::vector<llm::Conversation>& conversations) {
    std::vector<std::string> paths;
    for (const auto& conv : conversations) {
        const auto rel = std::filesystem::path("transcripts") / safe_component(conv.id.case_id) /
                         (safe_component(conv.id.file_stem()) + ".txt");
        std::error_code ec;
        std::filesystem::create_directories((root_ / rel).parent_path(), ec);
        if (ec) {
            throw StoreError("cannot create " + (root_ / rel).parent_path().string() + ": " + ec.message());
        }
        replace_file(root_ / rel, render_transcript(conv));
        paths.push_back(rel.generic_string());
    }
    return paths;
}

std::vector<VerdictRecord> Store::read_verdicts() const {
    std::vector<VerdictRecord> out;
    std::ifstream in(verdicts_path(), std::ios::binary);
    if (!in) {
        return out;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(verdict_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw StoreError(verdicts_path().string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

BatchStats Store::batch_stats(const std::optional<std::string>& batch) const {
    BatchStats s;
    for (const auto& r : read_verdicts()) {
        if (batch && r.batch != *batch) {
            continue;
        }
        ++s.cases;
        ++s.decisions[r.decision];
        s.turn_max = std::max(s.turn_max, r.turns);
        s.turn_sum += r.turns;
        s.turn_square_sum += static_cast<std::uint64_t>(r.turns) * r.turns;
        s.total_tokens += r.tokens;
    }
    if (batch && s.cases == 0) {
        throw NotFoundError("no records for batch '" + *batch + "'");
    }
    return s;
}

DirectoryResponseCache::DirectoryResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw StoreError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }
}

std::optional<std::string> DirectoryResponseCache::get(const std::string& key) {
    std::lock_guard lock(mu_);
    std::ifstream in(dir_ / (safe_component(key) + ".txt"), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void DirectoryResponseCache::put(const std::string& key, const std::string& response) {
    std::lock_guard lock(mu_);
    replace_file(dir_ / (safe_component(key) + ".txt"), response);
}

}  // namespace ubitriage::store
