#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace transtack {

// Base type for all errors raised by the library. name() is a stable,
// machine-readable tag; what() carries the detail.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
    virtual const char* name() const noexcept { return "Error"; }
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    const char* name() const noexcept override { return "ParseError"; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

class EmptyCorpus : public Error {
public:
    explicit EmptyCorpus(const std::string& message = "corpus has no tracks") : Error(message) {}
    const char* name() const noexcept override { return "EmptyCorpus"; }
};

class DegenerateRange : public Error {
public:
    explicit DegenerateRange(const std::string& message = "series minimum equals maximum")
        : Error(message) {}
    const char* name() const noexcept override { return "DegenerateRange"; }
};

class SeriesTooShort : public Error {
public:
    explicit SeriesTooShort(const std::string& message = "series too short to embed")
        : Error(message) {}
    const char* name() const noexcept override { return "SeriesTooShort"; }
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& message = "dimension mismatch")
        : Error(message) {}
    const char* name() const noexcept override { return "DimensionMismatch"; }
};

class EmptyDataset : public Error {
public:
    explicit EmptyDataset(const std::string& message = "dataset has no patterns")
        : Error(message) {}
    const char* name() const noexcept override { return "EmptyDataset"; }
};

class LengthMismatch : public Error {
public:
    explicit LengthMismatch(const std::string& message = "vector lengths differ")
        : Error(message) {}
    const char* name() const noexcept override { return "LengthMismatch"; }
};

class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& message = "input is empty") : Error(message) {}
    const char* name() const noexcept override { return "EmptyInput"; }
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(message) {}
    const char* name() const noexcept override { return "IoError"; }
};

}  // namespace transtack
