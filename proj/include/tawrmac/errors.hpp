#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tawrmac {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class CausalityError : public std::logic_error {
  using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tawrmac
