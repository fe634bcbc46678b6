#pragma once

#include <stdexcept>
#include <string>

namespace nilflow {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operands built over different number fields.
class DomainMismatchError : public Error {
public:
    explicit DomainMismatchError(const std::string& msg) : Error(msg) {}
};

class DivisionByZeroError : public Error {
public:
    explicit DivisionByZeroError(const std::string& msg) : Error(msg) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Generators do not span a full-rank subgroup.
class DegenerateLatticeError : public Error {
public:
    explicit DegenerateLatticeError(const std::string& msg) : Error(msg) {}
};

// Projected lattice generators are irrational; HNF cannot apply.
class UnsupportedLatticeError : public Error {
public:
    explicit UnsupportedLatticeError(const std::string& msg) : Error(msg) {}
};

// Scenario file problems, reported with field context.
class ScenarioError : public Error {
public:
    explicit ScenarioError(const std::string& msg) : Error(msg) {}
};

} // namespace nilflow
