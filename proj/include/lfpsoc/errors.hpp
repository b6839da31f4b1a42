// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// SOC (or other argument) outside the domain of a curve.
class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidTransform : public Error {
public:
    using Error::Error;
};

class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

// Identified circuit parameters that are not physical (non-positive, no time constant).
class PhysicalityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Wraps an error raised while processing step `step` of a sequence.
class StepError : public Error {
public:
    StepError(std::size_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

}  // namespace lfp
