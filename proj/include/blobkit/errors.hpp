#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blobkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
/// `path()` names the offending field when one is known ("blobs[2].a").
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& message, std::string path = {})
        : Error(message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Input is well-formed but carries too little information to act on
/// (empty masks, collinear pixels).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

struct RejectedLine {
    std::size_t line_number = 0;  // 1-based
    std::string text;
    std::string reason;
};

/// Text could not be parsed at all. Carries per-line rejects when the
/// input was line-oriented.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message, std::vector<RejectedLine> rejects = {},
                        std::string path = {})
        : Error(message), rejects_(std::move(rejects)), path_(std::move(path)) {}

    const std::vector<RejectedLine>& rejects() const noexcept { return rejects_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::vector<RejectedLine> rejects_;
    std::string path_;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// Optimistic-concurrency failure: the caller's revision is stale.
class RevisionConflict : public Error {
public:
    RevisionConflict(const std::string& message, unsigned long long current_revision)
        : Error(message), current_(current_revision) {}

    unsigned long long current_revision() const noexcept { return current_; }

private:
    unsigned long long current_;
};

}  // namespace blobkit
