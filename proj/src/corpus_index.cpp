#include "ubitriage/corpus_index.hpp"

#include "ubitriage/c_source_scanner.hpp"
#include "ubitriage/error.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <system_error>

namespace fs = std::filesystem;

namespace ubitriage::corpus {

namespace {

constexpr int kCacheVersion = 1;

bool read_file(const fs::path& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return false;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        return false;
    }
    out = buf.str();
    return true;
}

std::vector<std::string> list_sources(const fs::path& root, std::vector<std::string>* warnings) {
    std::vector<std::string> files;
    std::error_code ec;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        throw NotFoundError("cannot read corpus root " + root.string() + ": " + ec.message());
    }
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            if (warnings != nullptr) {
                warnings->push_back("directory walk: " + ec.message());
            }
            ec.clear();
            continue;
        }
        const auto& p = it->path();
        const auto ext = p.extension().string();
        if ((ext == ".c" || ext == ".h") && it->is_regular_file(ec)) {
            files.push_back(fs::relative(p, root, ec).generic_string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Number of leading path components `a` and `b`'s directories share.
std::size_t shared_dir_depth(const std::string& a, const std::string& b) {
    const auto da = fs::path(a).parent_path();
    const auto db = fs::path(b).parent_path();
    std::size_t n = 0;
    auto ia = da.begin();
    auto ib = db.begin();
    for (; ia != da.end() && ib != db.end() && *ia == *ib; ++ia, ++ib) {
        ++n;
    }
    return n;
}

nlohmann::json fingerprints(const fs::path& root, const std::vector<std::string>& files) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& f : files) {
        std::error_code size_ec;
        std::error_code time_ec;
        const auto p = root / f;
        const auto size = fs::file_size(p, size_ec);
        const auto mtime = fs::last_write_time(p, time_ec);
        const auto since_epoch = std::chrono::file_clock::to_sys(mtime).time_since_epoch();
        out[f] = {{"size", size_ec ? 0 : size},
                  {"mtime_ns",
                   time_ec ? 0 : std::chrono::duration_cast<std::chrono::nanoseconds>(since_epoch).count()}};
    }
    return out;
}

}  // namespace

std::vector<DefinitionLocation> scan_definitions(const std::string& file, std::string_view text) {
    const ScannedSource src(text);
    std::vector<DefinitionLocation> out;
    for (const auto& raw : find_function_definitions(src)) {
        DefinitionLocation loc;
        loc.name = raw.name;
        loc.file = file;
        loc.signature_line = static_cast<std::int64_t>(src.line_of(raw.header_offset));
        loc.end_line = static_cast<std::int64_t>(src.line_of(raw.close_brace_offset));
        std::size_t start = src.line_of(raw.header_offset);
        while (start > 1 && src.is_comment_only_line(start - 1)) {
            --start;
        }
        loc.start_line = static_cast<std::int64_t>(start);
        out.push_back(std::move(loc));
    }
    return out;
}

void CorpusIndex::add(DefinitionLocation loc) {
    by_file_[loc.file].push_back(loc);
    defs_[loc.name].push_back(std::move(loc));
    ++stats_.definitions_found;
}

CorpusIndex CorpusIndex::build(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw NotFoundError("corpus root " + root.string() + " is not a readable directory");
    }
    CorpusIndex index;
    index.root_ = root;
    for (const auto& file : list_sources(root, &index.stats_.warnings)) {
        std::string text;
        if (!read_file(root / file, text)) {
            index.stats_.warnings.push_back("unreadable file: " + file);
            continue;
        }
        ++index.stats_.files_scanned;
        for (auto& loc : scan_definitions(file, text)) {
            index.add(std::move(loc));
        }
    }
    return index;
}

FunctionDef CorpusIndex::load(const DefinitionLocation& loc) const {
    std::string text;
    if (!read_file(root_ / loc.file, text)) {
        throw NotFoundError("cannot re-read " + loc.file);
    }
    std::size_t line = 1;
    std::size_t begin = std::string::npos;
    std::size_t end = text.size();
    if (loc.start_line == 1) {
        begin = 0;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\n') {
            continue;
        }
        if (static_cast<std::int64_t>(line) == loc.end_line) {
            end = i + 1;
            break;
        }
        ++line;
        if (static_cast<std::int64_t>(line) == loc.start_line) {
            begin = i + 1;
        }
    }
    if (begin == std::string::npos || begin > end) {
        throw NotFoundError("stale location for " + loc.name + " in " + loc.file);
    }
    return FunctionDef{loc.name, loc.file, loc.start_line, loc.end_line, text.substr(begin, end - begin)};
}

FunctionDef CorpusIndex::extract_function(const std::string& name, const std::optional<std::string>& hint_file) const {
    auto it = defs_.find(name);
    if (it == defs_.end() || it->second.empty()) {
        throw NotFoundError("no definition of '" + name + "' in corpus");
    }
    const auto& candidates = it->second;
    if (candidates.size() == 1) {
        return load(candidates.front());
    }
    if (!hint_file) {
        std::vector<std::string> files;
        for (const auto& c : candidates) {
            files.push_back(c.file + ":" + std::to_string(c.signature_line));
        }
        throw AmbiguityError(name, std::move(files));
    }

    const DefinitionLocation* best = nullptr;
    auto rank = [&](const DefinitionLocation& c) {
        return std::make_tuple(c.file == *hint_file ? 1 : 0, shared_dir_depth(c.file, *hint_file));
    };
    for (const auto& c : candidates) {
        if (best == nullptr) {
            best = &c;
            continue;
        }
        const auto rc = rank(c);
        const auto rb = rank(*best);
        if (rc > rb || (rc == rb && std::tie(c.file, c.signature_line) < std::tie(best->file, best->signature_line))) {
            best = &c;
        }
    }
    return load(*best);
}

FunctionDef CorpusIndex::enclosing_function(const std::string& file, std::int64_t line) const {
    auto it = by_file_.find(file);
    if (it != by_file_.end()) {
        for (const auto& loc : it->second) {
            if (loc.signature_line <= line && line <= loc.end_line) {
                return load(loc);
            }
        }
    }
    throw NotFoundError("no function in " + file + " spans line " + std::to_string(line));
}

nlohmann::json CorpusIndex::to_json() const {
    nlohmann::json defs = nlohmann::json::object();
    for (const auto& [name, locs] : defs_) {
        auto& arr = defs[name] = nlohmann::json::array();
        for (const auto& l : locs) {
            arr.push_back({l.file, l.start_line, l.signature_line, l.end_line});
        }
    }
    return {{"files_scanned", stats_.files_scanned},
            {"warnings", stats_.warnings},
            {"definitions", std::move(defs)}};
}

CorpusIndex CorpusIndex::from_json(const nlohmann::json& j, const fs::path& root) {
    CorpusIndex index;
    index.root_ = root;
    index.stats_.files_scanned = j.at("files_scanned").get<std::size_t>();
    index.stats_.warnings = j.at("warnings").get<std::vector<std::string>>();
    // Locations are re-sorted into build order (file, then position) so a
    // loaded index compares equal to a fresh build.
    std::vector<DefinitionLocation> all;
    for (const auto& [name, arr] : j.at("definitions").items()) {
        for (const auto& t : arr) {
            all.push_back({name, t.at(0).get<std::string>(), t.at(1).get<std::int64_t>(),
                           t.at(2).get<std::int64_t>(), t.at(3).get<std::int64_t>()});
        }
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return std::tie(a.file, a.signature_line) < std::tie(b.file, b.signature_line);
    });
    for (auto& l : all) {
        index.add(std::move(l));
    }
    return index;
}

CorpusIndex build_index(const fs::path& root) {
    return CorpusIndex::build(root);
}

FunctionDef extract_function(const CorpusIndex& index, const std::string& name,
                             const std::optional<std::string>& hint_file) {
    return index.extract_function(name, hint_file);
}

FunctionDef enclosing_function(const CorpusIndex& index, const std::string& file, std::int64_t line) {
    return index.enclosing_function(file, line);
}

void save_index_cache(const CorpusIndex& index, const fs::path& cache_path) {
    nlohmann::json doc = {{"version", kCacheVersion},
                          {"files", fingerprints(index.root(), list_sources(index.root(), nullptr))},
                          {"index", index.to_json()}};
    if (cache_path.has_parent_path()) {
        fs::create_directories(cache_path.parent_path());
    }
    std::ofstream out(cache_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StoreError("cannot write index cache " + cache_path.string());
    }
    out << doc.dump() << "\n";
}

CorpusIndex load_or_build_index(const fs::path& root, const fs::path& cache_path, bool* rebuilt) {
    std::string text;
    if (read_file(cache_path, text)) {
        try {
            const auto doc = nlohmann::json::parse(text);
            if (doc.at("version").get<int>() == kCacheVersion &&
                doc.at("files") == fingerprints(root, list_sources(root, nullptr))) {
                if (rebuilt != nullptr) {
                    *rebuilt = false;
                }
                return CorpusIndex::from_json(doc.at("index"), root);
            }
        } catch (const nlohmann::json::exception&) {
            // Unreadable cache: fall through to a rebuild.
        }
    }
    auto index = CorpusIndex::build(root);
    save_index_cache(index, cache_path);
    if (rebuilt != nullptr) {
        *rebuilt = true;
    }
    return index;
}

}  // namespace ubitriage::corpus
