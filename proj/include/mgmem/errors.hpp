/*
 * mgmem - error types
 *
 * Every failure the engine can signal is a typed exception rooted at
 * mgmem::Error, so callers can catch broadly or by cause.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgmem {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// core-model
class MalformedIdError : public Error {
public:
    using Error::Error;
};

class MalformedTimestampError : public Error {
public:
    using Error::Error;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

// gateway
class MissingBindingError : public Error {
public:
    MissingBindingError(std::string message, std::vector<std::string> names)
        : Error(std::move(message)), missing(std::move(names)) {}
    std::vector<std::string> missing;
};

class ContractViolationError : public Error {
public:
    ContractViolationError(std::string message, std::string schema_name, std::string raw)
        : Error(std::move(message)), schema(std::move(schema_name)), raw_output(std::move(raw)) {}
    std::string schema;
    std::string raw_output; // kept for logging/audit
};

class BackendUnavailableError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class ScriptExhaustedError : public Error {
public:
    using Error::Error;
};

// store
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

class StorageFailureError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class DeletedError : public Error {
public:
    using Error::Error;
};

// constructor
class EmptyWindowError : public Error {
public:
    using Error::Error;
};

// cli-eval
class MalformedRecordError : public Error {
public:
    MalformedRecordError(std::string message, std::size_t line_number,
                         std::int64_t sessions_done = 0, std::int64_t turns_done = 0)
        : Error(std::move(message)), line(line_number), sessions(sessions_done), turns(turns_done) {}
    std::size_t line;
    // partial progress at the point of failure
    std::int64_t sessions;
    std::int64_t turns;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mgmem
