#pragma once

#include <stdexcept>
#include <string>

namespace dail {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dataset files missing, malformed, or internally inconsistent.
class LoadError : public Error {
public:
    using Error::Error;
};

// Bad configuration value; the CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// No SQL-like content could be located in an LLM response.
class ExtractionError : public Error {
public:
    ExtractionError(const std::string& what, std::string raw)
        : Error(what), raw_response(std::move(raw)) {}
    std::string raw_response;
};

// SQL text rejected by the lexer or parser.
class ParseError : public Error {
public:
    using Error::Error;
};

// Replay backend asked for a prompt that was never recorded.
class FixtureMissError : public Error {
public:
    FixtureMissError(const std::string& what, std::string key)
        : Error(what), key_hash(std::move(key)) {}
    std::string key_hash;
};

// Backend transport failed after exhausting retries.
class BackendError : public Error {
public:
    using Error::Error;
};

} // namespace dail
