#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowprop {

// Violated operation precondition (shape mismatch, level misalignment, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration value or unreadable configuration file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    ConfigError(const std::string& msg, int line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = -1;
};

// Malformed or truncated binary payload; offset points at the failing byte.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

// Requested sample cannot be drawn (clip shorter than the required offsets).
class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation over an empty or inconsistent ground-truth set.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace flowprop
