#include "ubitriage/c_source_scanner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace ubitriage::corpus {

namespace {

constexpr auto npos = std::string_view::npos;

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_blank(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

struct CondFrame {
    bool parent_active;
    bool active;
    bool taken;
};

/// First token of a directive's controlling expression, comments removed.
std::string first_expr_token(std::string_view rest) {
    std::size_t i = 0;
    while (i < rest.size()) {
        if (is_blank(rest[i])) {
            ++i;
        } else if (rest.substr(i, 2) == "/*") {
            auto e = rest.find("*/", i + 2);
            i = e == npos ? rest.size() : e + 2;
        } else {
            break;
        }
    }
    std::size_t j = i;
    while (j < rest.size() && (is_ident_char(rest[j]))) {
        ++j;
    }
    return std::string(rest.substr(i, j - i));
}

}  // namespace

ScannedSource::ScannedSource(std::string_view text) : text_(text), classes_(text.size(), ByteClass::Code) {
    const std::size_t n = text.size();
    if (n > 0) {
        line_starts_.push_back(0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (text[i] == '\n' && i + 1 < n) {
            line_starts_.push_back(i + 1);
        }
    }

    std::vector<CondFrame> cond;
    auto active = [&] { return cond.empty() || cond.back().active; };
    auto plain = [&] { return active() ? ByteClass::Code : ByteClass::Inactive; };
    auto mark = [&](std::size_t b, std::size_t e, ByteClass cls) {
        std::fill(classes_.begin() + static_cast<std::ptrdiff_t>(b), classes_.begin() + static_cast<std::ptrdiff_t>(e), cls);
    };

    bool at_line_start = true;
    std::size_t i = 0;
    while (i < n) {
        const char c = text[i];
        const char next = i + 1 < n ? text[i + 1] : '\0';

        if (at_line_start && c == '#') {
            std::size_t j = i + 1;
            while (j < n) {
                if (text[j] == '\\' && j + 1 < n && text[j + 1] == '\n') {
                    j += 2;
                } else if (text[j] == '\\' && j + 2 < n && text[j + 1] == '\r' && text[j + 2] == '\n') {
                    j += 3;
                } else if (text[j] == '/' && j + 1 < n && text[j + 1] == '*') {
                    auto e = text.find("*/", j + 2);
                    j = e == npos ? n : e + 2;
                } else if (text[j] == '\n') {
                    break;
                } else {
                    ++j;
                }
            }
            mark(i, j, ByteClass::Directive);

            std::string_view body = text.substr(i + 1, j - i - 1);
            std::size_t k = 0;
            while (k < body.size() && is_blank(body[k])) {
                ++k;
            }
            std::size_t kend = k;
            while (kend < body.size() && is_ident_char(body[kend])) {
                ++kend;
            }
            const std::string_view keyword = body.substr(k, kend - k);
            const std::string expr = first_expr_token(body.substr(kend));

            if (keyword == "if" || keyword == "ifdef" || keyword == "ifndef") {
                const bool parent = active();
                const bool first = !(keyword == "if" && expr == "0");
                cond.push_back({parent, parent && first, first});
            } else if (keyword == "elif" && !cond.empty()) {
                auto& f = cond.back();
                const bool candidate = expr != "0";
                f.active = f.parent_active && !f.taken && candidate;
                f.taken = f.taken || candidate;
            } else if (keyword == "else" && !cond.empty()) {
                auto& f = cond.back();
                f.active = f.parent_active && !f.taken;
                f.taken = true;
            } else if (keyword == "endif" && !cond.empty()) {
                cond.pop_back();
            }
            at_line_start = false;
            i = j;
            continue;
        }

        if (c == '\n') {
            classes_[i] = plain();
            at_line_start = true;
            ++i;
            continue;
        }
        if (is_blank(c)) {
            classes_[i] = plain();
            ++i;
            continue;
        }
        at_line_start = false;

        if (c == '/' && next == '*') {
            auto e = text.find("*/", i + 2);
            const std::size_t end = e == npos ? n : e + 2;
            mark(i, end, active() ? ByteClass::Comment : ByteClass::Inactive);
            i = end;
            continue;
        }
        if (c == '/' && next == '/') {
            std::size_t end = i;
            while (end < n && text[end] != '\n') {
                ++end;
            }
            mark(i, end, active() ? ByteClass::Comment : ByteClass::Inactive);
            i = end;
            continue;
        }
        if (!active()) {
            classes_[i] = ByteClass::Inactive;
            ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = i + 1;
            while (j < n) {
                if (text[j] == '\\') {
                    j += 2;
                } else if (text[j] == c) {
                    ++j;
                    break;
                } else if (text[j] == '\n') {
                    break;
                } else {
                    ++j;
                }
            }
            j = std::min(j, n);
            mark(i, j, ByteClass::Literal);
            i = j;
            continue;
        }
        classes_[i] = ByteClass::Code;
        ++i;
    }
}

std::size_t ScannedSource::line_of(std::size_t offset) const {
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    return static_cast<std::size_t>(it - line_starts_.begin());
}

std::pair<std::size_t, std::size_t> ScannedSource::line_range(std::size_t line) const {
    if (line == 0 || line > line_starts_.size()) {
        throw std::out_of_range("line " + std::to_string(line) + " outside file");
    }
    const std::size_t begin = line_starts_[line - 1];
    const std::size_t end = line < line_starts_.size() ? line_starts_[line] : text_.size();
    return {begin, end};
}

bool ScannedSource::is_comment_only_line(std::size_t line) const {
    auto [b, e] = line_range(line);
    bool saw_comment = false;
    for (std::size_t i = b; i < e; ++i) {
        const char c = text_[i];
        if (c == '\n' || is_blank(c)) {
            continue;
        }
        if (classes_[i] != ByteClass::Comment) {
            return false;
        }
        saw_comment = true;
    }
    return saw_comment;
}

namespace {

struct Token {
    std::string text;
    bool ident = false;
    bool literal = false;
};

std::vector<Token> tokenize_header(const ScannedSource& src, std::size_t begin, std::size_t end) {
    std::vector<Token> out;
    const auto text = src.text();
    std::size_t i = begin;
    while (i < end) {
        const auto cls = src.at(i);
        if (cls == ByteClass::Literal) {
            std::size_t j = i;
            while (j < end && src.at(j) == ByteClass::Literal) {
                ++j;
            }
            out.push_back({std::string(text.substr(i, j - i)), false, true});
            i = j;
            continue;
        }
        if (cls != ByteClass::Code || std::isspace(static_cast<unsigned char>(text[i])) != 0) {
            ++i;
            continue;
        }
        const char c = text[i];
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < end && src.at(j) == ByteClass::Code && is_ident_char(text[j])) {
                ++j;
            }
            out.push_back({std::string(text.substr(i, j - i)), true, false});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
            std::size_t j = i;
            while (j < end && src.at(j) == ByteClass::Code && is_ident_char(text[j])) {
                ++j;
            }
            out.push_back({std::string(text.substr(i, j - i)), false, false});
            i = j;
            continue;
        }
        if (i + 1 < end && text[i + 1] == '=' && (c == '=' || c == '!' || c == '<' || c == '>')) {
            out.push_back({std::string(text.substr(i, 2)), false, false});
            i += 2;
            continue;
        }
        out.push_back({std::string(1, c), false, false});
        ++i;
    }
    return out;
}

bool is_attribute_word(std::string_view s) {
    static constexpr std::array<std::string_view, 6> words = {
        "__attribute__", "__attribute", "__declspec", "_Alignas", "alignas", "__asm__"};
    return std::find(words.begin(), words.end(), s) != words.end();
}

bool is_reserved_word(std::string_view s) {
    static constexpr std::array<std::string_view, 24> words = {
        "if",     "for",   "while",  "switch", "return",   "sizeof", "do",       "else",
        "case",   "goto",  "typedef", "void",  "char",     "short",  "int",      "long",
        "float",  "double", "signed", "unsigned", "_Bool", "struct", "union",    "enum"};
    return std::find(words.begin(), words.end(), s) != words.end();
}

/// Index one past the `)` matching the `(` at `open`, or npos.
std::size_t skip_group(const std::vector<Token>& toks, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (toks[i].text == "(") {
            ++depth;
        } else if (toks[i].text == ")") {
            if (--depth == 0) {
                return i + 1;
            }
        }
    }
    return npos;
}

enum class HeaderKind { Other, Function, Transparent };

HeaderKind classify_header(const std::vector<Token>& toks, std::string& name) {
    if (toks.empty()) {
        return HeaderKind::Other;
    }
    if (toks.size() == 2 && toks[0].text == "extern" && toks[1].literal) {
        return HeaderKind::Transparent;
    }
    if (toks[0].text == "typedef") {
        return HeaderKind::Other;
    }
    int paren = 0;
    for (const auto& t : toks) {
        if (t.text == "(") {
            ++paren;
        } else if (t.text == ")") {
            --paren;
        } else if (t.text == "=" && paren == 0) {
            return HeaderKind::Other;
        }
    }

    std::size_t k = 0;
    while (k < toks.size()) {
        if (toks[k].text != "(") {
            ++k;
            continue;
        }
        if (k == 0 || !toks[k - 1].ident) {
            return HeaderKind::Other;
        }
        if (is_attribute_word(toks[k - 1].text)) {
            k = skip_group(toks, k);
            if (k == npos) {
                return HeaderKind::Other;
            }
            continue;
        }
        break;
    }
    if (k >= toks.size() || is_reserved_word(toks[k - 1].text)) {
        return HeaderKind::Other;
    }

    // After the parameter list only attribute-like words and their argument
    // groups may appear before the body.
    std::size_t j = skip_group(toks, k);
    if (j == npos) {
        return HeaderKind::Other;
    }
    while (j < toks.size()) {
        if (toks[j].ident) {
            ++j;
        } else if (toks[j].text == "(") {
            j = skip_group(toks, j);
            if (j == npos) {
                return HeaderKind::Other;
            }
        } else {
            return HeaderKind::Other;
        }
    }
    name = toks[k - 1].text;
    return HeaderKind::Function;
}

}  // namespace

std::vector<RawDefinition> find_function_definitions(const ScannedSource& source) {
    std::vector<RawDefinition> out;
    const auto text = source.text();

    int depth = 0;
    int transparent_open = 0;
    std::size_t header_start = npos;
    bool in_function = false;
    RawDefinition current;

    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto cls = source.at(i);
        if (cls != ByteClass::Code && cls != ByteClass::Literal) {
            continue;
        }
        const char c = text[i];
        if (cls == ByteClass::Code && std::isspace(static_cast<unsigned char>(c)) != 0) {
            continue;
        }

        if (depth > 0) {
            if (cls != ByteClass::Code) {
                continue;
            }
            if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    if (in_function) {
                        current.close_brace_offset = i;
                        out.push_back(std::move(current));
                        current = RawDefinition{};
                        in_function = false;
                    }
                    header_start = npos;
                }
            }
            continue;
        }

        if (cls == ByteClass::Code && c == ';') {
            header_start = npos;
            continue;
        }
        if (cls == ByteClass::Code && c == '}') {
            if (transparent_open > 0) {
                --transparent_open;
            }
            header_start = npos;
            continue;
        }
        if (cls == ByteClass::Code && c == '{') {
            std::string name;
            const auto kind = header_start == npos
                                  ? HeaderKind::Other
                                  : classify_header(tokenize_header(source, header_start, i), name);
            if (kind == HeaderKind::Transparent) {
                ++transparent_open;
                header_start = npos;
                continue;
            }
            depth = 1;
            if (kind == HeaderKind::Function) {
                in_function = true;
                current.name = std::move(name);
                current.header_offset = header_start;
                current.open_brace_offset = i;
            }
            continue;
        }
        if (header_start == npos) {
            header_start = i;
        }
    }
    return out;
}

}  // namespace ubitriage::corpus
