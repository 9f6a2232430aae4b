#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace matchpyramid {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. The message always carries "<file>:<line>: ".
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// Shape or dimension mismatch between two objects that must agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared where only finite reals are allowed.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace matchpyramid
