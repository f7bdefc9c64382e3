#pragma once

#include <stdexcept>
#include <string>

namespace glova {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched dimensions or otherwise malformed inputs.
class StructuralError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Raised by evaluators; `diagnostics` carries captured simulator output.
class EvaluationError : public Error {
public:
    explicit EvaluationError(const std::string& what, std::string diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}
    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

class StateError : public Error {
public:
    using Error::Error;
};

}  // namespace glova
