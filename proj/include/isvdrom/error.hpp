#pragma once

#include <stdexcept>
#include <string>

namespace isvdrom {

enum class ErrorKind {
  Argument,   // shape mismatch, violated precondition
  Numerical,  // rank deficiency, singular operator
  Solver,     // nonlinear/iterative solver breakdown
  Config,     // invalid experiment configuration
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace isvdrom
