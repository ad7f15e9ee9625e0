#pragma once

#include <stdexcept>
#include <string>

namespace mohan {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A field of a config or domain type is outside its admissible interval.
// The message names the first violated field and the interval.
class ValidationError : public Error {
public:
    ValidationError(const std::string& field, const std::string& message)
        : Error(field + " " + message), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// The rational-model denominator dropped below its positivity floor.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double denominator)
        : Error(what), denominator_(denominator) {}

    double denominator() const noexcept { return denominator_; }

private:
    double denominator_;
};

// A prediction or statistic came out non-finite.
class OverflowError : public Error {
public:
    using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mohan
