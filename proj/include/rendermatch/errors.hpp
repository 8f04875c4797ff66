#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rendermatch {

// Process exit codes used by the CLI; errors below map onto them.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kParse = 3,
  kUnresolved = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kFailure; }
};

// Malformed input line. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kParse; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a structural rule (duplicate id, cycle, ...).
class SemanticError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kParse; }
};

// A term or node id that does not exist in the ontology.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(std::string term)
      : Error("unresolved term '" + term + "'"), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kUnresolved; }

 private:
  std::string term_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

}  // namespace rendermatch
