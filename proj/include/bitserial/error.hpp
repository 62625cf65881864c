#pragma once
// exception hierarchy shared by all modules

#include <stdexcept>
#include <string>

namespace bitserial {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// element does not fit the declared bitwidth/signedness
class RangeError : public Error {
 public:
  using Error::Error;
};

// operand shapes do not agree
class DimensionError : public Error {
 public:
  using Error::Error;
};

// malformed program text, config file or matrix file
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// workload cannot be mapped onto the overlay instance
class ScheduleError : public Error {
 public:
  using Error::Error;
};

}  // namespace bitserial
