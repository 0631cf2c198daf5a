#pragma once

#include <stdexcept>
#include <string>

namespace crem {

// Bad input: malformed profile, out-of-range parameter, inconsistent request.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Refused operation: a request that is well-formed but would blow a resource
// budget or violate an oracle mode restriction. The CLI maps this to exit
// code 2.
class GuardError : public std::runtime_error {
public:
    explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace crem
