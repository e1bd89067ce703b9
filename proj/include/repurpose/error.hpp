#ifndef REPURPOSE_ERROR_HPP
#define REPURPOSE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace repurpose {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or flag values; the CLI maps these to exit code 2.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
  public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

  private:
    std::string path_;
    std::size_t line_;
};

/// A referenced compound, target, or label source does not exist.
class NotFoundError : public Error {
  public:
    using Error::Error;
};

/// The activity filter selected no compounds for the queried target.
class NoRelevantCompoundsError : public Error {
  public:
    using Error::Error;
};

/// No activity record survived the interaction-matrix filter.
class NoInteractionsError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure during training (non-finite factor or objective).
class NumericalError : public Error {
  public:
    using Error::Error;
};

}  // namespace repurpose

#endif  // REPURPOSE_ERROR_HPP
