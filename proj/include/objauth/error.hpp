#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace objauth {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Hex text could not be decoded into a fixed-width value.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// The system randomness source failed. There is no fallback.
class RandomnessError : public Error {
public:
    using Error::Error;
};

class AlreadyExists : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read, written or synced.
class IoError : public Error {
public:
    using Error::Error;
};

/// A backing-file line could not be parsed. `line()` is 1-based.
class StoreLoadError : public Error {
public:
    StoreLoadError(std::size_t line, const std::string& reason)
        : Error("account store line " + std::to_string(line) + ": " + reason), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace objauth
