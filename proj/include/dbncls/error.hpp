#ifndef DBNCLS_ERROR_HPP
#define DBNCLS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace dbncls {

// Coarse error categories; the CLI maps each to a distinct exit code.
enum class ErrorCategory {
    config,        // bad configuration file or flags
    io,            // file not found / unreadable / unwritable
    format,        // malformed file contents (IDX, checkpoint, CSV)
    dimension,     // shape or index mismatch
    guard,         // exact-enumeration size guard violated
    prerequisite,  // strategy run without its required snapshot
    internal,      // everything else
};

std::string_view to_string(ErrorCategory c);

// All library errors carry a category plus a stable machine-readable code
// (e.g. "idx_bad_magic") so callers can distinguish failure kinds without
// parsing prose.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string code, const std::string& message)
        : std::runtime_error(message), category_(category), code_(std::move(code)) {}

    ErrorCategory category() const { return category_; }
    const std::string& code() const { return code_; }

private:
    ErrorCategory category_;
    std::string code_;
};

[[noreturn]] inline void throw_error(ErrorCategory cat, std::string code, const std::string& msg) {
    throw Error(cat, std::move(code), msg);
}

} // namespace dbncls

#endif
