#pragma once

#include <stdexcept>
#include <string>

namespace voiceclone {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input failed a contract check (bad record, bad config, bad score sheet).
// The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A model backend failed. Retriable failures may succeed on a second attempt.
class AdapterError : public Error {
public:
    AdapterError(const std::string& what, bool retriable, std::string diagnostics = {})
        : Error(what), retriable_(retriable), diagnostics_(std::move(diagnostics)) {}

    bool retriable() const noexcept { return retriable_; }
    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    bool retriable_;
    std::string diagnostics_;
};

// Wire protocol violation on a gateway session.
class ProtocolError : public Error {
public:
    ProtocolError(std::string code, const std::string& what)
        : Error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace voiceclone
