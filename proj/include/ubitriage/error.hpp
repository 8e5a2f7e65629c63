#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubitriage {

/// Root of every error thrown by the library. Callers that only need to know
/// "something went wrong with this case" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text: a report document, a constraint, a model fixture, an LLM
/// structured block. `position` is a byte offset into the offending input.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at offset " + std::to_string(position) + ")"), position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A well-formed document whose records do not match the expected shape.
class SchemaError : public Error {
public:
    SchemaError(std::string field, std::size_t record_index, const std::string& detail)
        : Error("record " + std::to_string(record_index) + ": field '" + field + "' " + detail),
          field_(std::move(field)),
          record_index_(record_index) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }
    [[nodiscard]] std::size_t record_index() const noexcept { return record_index_; }

private:
    std::string field_;
    std::size_t record_index_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class AmbiguityError : public Error {
public:
    AmbiguityError(const std::string& name, std::vector<std::string> candidates);

    [[nodiscard]] const std::vector<std::string>& candidates() const noexcept { return candidates_; }

private:
    std::vector<std::string> candidates_;
};

/// Exhaustive enumeration refused because the search space is too large.
class CapacityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A conversation could not be opened (e.g. replay transcript missing).
class SetupError : public Error {
public:
    using Error::Error;
};

class TurnCapError : public Error {
public:
    using Error::Error;
};

/// Replay prompt digest differs from the pinned one.
class DriftError : public Error {
public:
    DriftError(const std::string& what, std::size_t turn) : Error(what), turn_(turn) {}

    [[nodiscard]] std::size_t turn() const noexcept { return turn_; }

private:
    std::size_t turn_;
};

class BackendError : public Error {
public:
    using Error::Error;
};

/// The service reported that the conversation no longer fits its context window.
class OverflowError : public BackendError {
public:
    using BackendError::BackendError;
};

/// The model kept answering outside the expected structured format.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class StoreError : public Error {
public:
    using Error::Error;
};

class DuplicateRecordError : public StoreError {
public:
    using StoreError::StoreError;
};

inline AmbiguityError::AmbiguityError(const std::string& name, std::vector<std::string> candidates)
    : Error([&] {
          std::string msg = "'" + name + "' is defined in several files:";
          for (const auto& c : candidates) {
              msg += " " + c;
          }
          return msg;
      }()),
      candidates_(std::move(candidates)) {}

}  // namespace ubitriage
