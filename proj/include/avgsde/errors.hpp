#pragma once

#include <stdexcept>
#include <string>

namespace avgsde {

// Malformed expression or config text. Carries a character position
// (expressions) or line number (config files) in the message.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Evaluation left the domain (division by zero, sqrt of a negative,
// non-finite pow result, ...). Names the offending subexpression.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, const std::string& subexpr)
      : std::runtime_error(what + " in '" + subexpr + "'"), subexpr_(subexpr) {}
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string subexpr_;
};

// Invalid experiment configuration (missing key, bad range, unparseable line).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure at run time: non-finite state, divergent normalization,
// centering violation, under-resolved quadrature.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace avgsde
