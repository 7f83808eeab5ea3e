#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace axon {

/// Base class for all axonsim errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Construction-time parameter validation failure. Collects every violated
/// constraint so sweep tooling can report them all at once.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid parameters:";
        for (const auto& e : v) {
            s += "\n  - " + e;
        }
        return s;
    }
    std::vector<std::string> violations_;
};

/// Numerical solver failure (non-contracting fixed point, singular system, ...).
class SolverError : public Error {
public:
    SolverError(const std::string& msg, long step) : Error(msg), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// Moving domain collapsed below the configured guard length.
class DomainCollapseError : public Error {
public:
    DomainCollapseError(double l, double l_min)
        : Error("domain collapse: l = " + std::to_string(l) + " <= l_min = " +
                std::to_string(l_min)),
          l_(l) {}
    double length() const { return l_; }

private:
    double l_;
};

/// Argument outside the domain an operation is defined on.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

}  // namespace axon
