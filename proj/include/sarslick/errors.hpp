#ifndef SARSLICK_ERRORS_HPP
#define SARSLICK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sarslick {

// Bad configuration or parameters supplied by the caller. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed, corrupt or inconsistent data. CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure, carries the offending path. CLI exit code 3.
struct IoError : std::runtime_error {
    IoError(const std::string& msg, const std::string& path)
        : std::runtime_error(msg + ": " + path), path_(path) {}
    const std::string& path() const { return path_; }
  private:
    std::string path_;
};

// Numeric input outside the valid domain; names the offending field.
struct DomainError : std::runtime_error {
    DomainError(const std::string& field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field_(field) {}
    const std::string& field() const { return field_; }
  private:
    std::string field_;
};

}  // namespace sarslick

#endif
