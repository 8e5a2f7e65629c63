#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ubitriage::corpus {

/// What each byte of a C source file is, lexically.
enum class ByteClass : std::uint8_t {
    Code,
    Comment,
    /// Inside a string or character literal, quotes included.
    Literal,
    /// A preprocessor directive line, continuation lines included.
    Directive,
    /// Text in a conditional branch we do not treat as compiled.
    Inactive,
};

/// Byte classification of a whole file plus a line table.
///
/// Conditional compilation is resolved without evaluating expressions: the
/// first branch of every `#if`/`#ifdef`/`#ifndef` is active, later branches
/// are not, except that `#if 0` hands activity to the next branch.
class ScannedSource {
public:
    explicit ScannedSource(std::string_view text);

    [[nodiscard]] std::string_view text() const noexcept { return text_; }
    [[nodiscard]] ByteClass at(std::size_t offset) const { return classes_[offset]; }
    [[nodiscard]] std::size_t line_count() const noexcept { return line_starts_.size(); }

    /// 1-based line holding `offset`.
    [[nodiscard]] std::size_t line_of(std::size_t offset) const;
    /// Byte range [begin, end) of 1-based `line`, newline included.
    [[nodiscard]] std::pair<std::size_t, std::size_t> line_range(std::size_t line) const;
    /// True when the line has comment text and nothing else but whitespace.
    [[nodiscard]] bool is_comment_only_line(std::size_t line) const;

private:
    std::string_view text_;
    std::vector<ByteClass> classes_;
    std::vector<std::size_t> line_starts_;
};

/// A top-level `name(...) ... { ... }` found by the lexical scan. Offsets index
/// into the scanned text.
struct RawDefinition {
    std::string name;
    std::size_t header_offset = 0;
    std::size_t open_brace_offset = 0;
    std::size_t close_brace_offset = 0;
};

/// Finds function definitions at file scope. Aggregate initializers, struct
/// and enum bodies, and function-like macros are not reported. An
/// `extern "C" { ... }` block is transparent.
std::vector<RawDefinition> find_function_definitions(const ScannedSource& source);

}  // namespace ubitriage::corpus
