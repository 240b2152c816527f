#pragma once

#include <stdexcept>
#include <string>

namespace latte {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent graph bundle. `line` is 0 when the problem is not
// tied to a specific TSV line.
class GraphError : public Error {
 public:
  GraphError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Invalid argument shapes or values passed to a numerical routine.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A non-finite value showed up during training or backpropagation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace latte
