#ifndef PCHSAT_COMMON_HPP
#define PCHSAT_COMMON_HPP

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pchsat {

using Rational = mpq_class;
using VarId = std::size_t;
using ValueId = std::size_t;

enum class Relation { le, ge, eq };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::le: return "<=";
    case Relation::ge: return ">=";
    case Relation::eq: return "=";
  }
  return "?";
}

/// Exact comparison `lhs rel rhs`.
inline bool holds(const Rational& lhs, Relation rel, const Rational& rhs) {
  switch (rel) {
    case Relation::le: return lhs <= rhs;
    case Relation::ge: return lhs >= rhs;
    case Relation::eq: return lhs == rhs;
  }
  return false;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FragmentMismatch : public Error {
 public:
  using Error::Error;
};

/// Internal consistency failure; indicates a bug, never bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A resource cap was exceeded. `requested` is the exact offending count in
/// decimal, which may not fit in 64 bits.
class CapExceeded : public Error {
 public:
  CapExceeded(std::string what, std::string requested, std::uint64_t cap)
      : Error(what + ": " + requested + " exceeds cap " + std::to_string(cap)),
        requested_(std::move(requested)),
        cap_(cap) {}

  const std::string& requested() const { return requested_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::string requested_;
  std::uint64_t cap_;
};

#define PCHSAT_CAP_ERROR(Name, Label)                                       \
  class Name : public CapExceeded {                                         \
   public:                                                                  \
    Name(std::string requested, std::uint64_t cap)                          \
        : CapExceeded(Label, std::move(requested), cap) {}                  \
  };

PCHSAT_CAP_ERROR(SupportTooLarge, "hidden-value support")
PCHSAT_CAP_ERROR(FunctionSpaceTooLarge, "function space size")
PCHSAT_CAP_ERROR(ExactTooLarge, "exact treewidth vertex count")
PCHSAT_CAP_ERROR(TooLarge, "brute-force size")
PCHSAT_CAP_ERROR(LpTooLarge, "LP variable count")

#undef PCHSAT_CAP_ERROR

/// Parses an exact rational: `3`, `-3`, `2/6`, `0.25`, `-1.5`.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ValidationError("empty rational literal");
  bool negative = false;
  std::size_t pos = 0;
  if (s[0] == '-' || s[0] == '+') {
    negative = s[0] == '-';
    pos = 1;
  }
  std::string body = s.substr(pos);
  auto all_digits = [](const std::string& t) {
    if (t.empty()) return false;
    for (char c : t)
      if (c < '0' || c > '9') return false;
    return true;
  };
  Rational out;
  if (auto slash = body.find('/'); slash != std::string::npos) {
    std::string num = body.substr(0, slash), den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw ValidationError("malformed rational '" + s + "'");
    mpz_class d(den, 10);
    if (d == 0) throw ValidationError("zero denominator in '" + s + "'");
    out = Rational(mpz_class(num, 10), d);
  } else if (auto dot = body.find('.'); dot != std::string::npos) {
    std::string whole = body.substr(0, dot), frac = body.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || !all_digits(frac)) throw ValidationError("malformed decimal '" + s + "'");
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    out = Rational(mpz_class(whole + frac, 10), scale);
  } else {
    if (!all_digits(body)) throw ValidationError("malformed integer '" + s + "'");
    out = Rational(mpz_class(body, 10));
  }
  out.canonicalize();
  if (negative) out = -out;
  return out;
}

/// `a/b`, or `a` for integers.
inline std::string to_string(const Rational& q) { return q.get_str(); }

}  // namespace pchsat

#endif  // PCHSAT_COMMON_HPP
