#pragma once

#include <stdexcept>
#include <string>

namespace clinicsched {

// Thrown when a caller violates a documented precondition or an object is
// constructed in an invalid state. Messages name the offending field/value.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// Thrown when a model instance admits no feasible solution (e.g. commitment
// floors that no slot configuration can honor). The message names the first
// binding constraint found.
class InfeasibleModel : public std::runtime_error {
public:
    explicit InfeasibleModel(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on malformed persisted artifacts (templates, scenarios, logs).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
[[noreturn]] inline void contract_fail(const char* cond, const char* file, int line,
                                       const std::string& msg) {
    throw ContractViolation(std::string(msg.empty() ? "contract violation" : msg) +
                            " [" + cond + " at " + file + ":" + std::to_string(line) + "]");
}
}  // namespace detail

}  // namespace clinicsched

#define CS_REQUIRE(cond, msg)                                                       \
    do {                                                                            \
        if (!(cond)) ::clinicsched::detail::contract_fail(#cond, __FILE__, __LINE__, (msg)); \
    } while (0)
