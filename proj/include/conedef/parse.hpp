#pragma once

#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/polynomial.hpp"
#include "conedef/rational.hpp"

namespace conedef {

// Character cursor over one line of input, tracking 1-based columns for error messages.
class Cursor {
public:
  Cursor(std::string_view text, int line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  // peek without skipping whitespace
  char peek_raw() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  int column() const { return static_cast<int>(pos_) + 1; }
  int line() const { return line_; }
  std::size_t pos() const { return pos_; }

  bool digit_next() {
    char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
  }

  // unsigned decimal integer, as a string
  std::string digits() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    return std::string(text_.substr(start, pos_ - start));
  }

  long small_int() {
    std::string d = digits();
    if (d.size() > 9) fail("integer too large");
    return std::stol(d);
  }

  long signed_int() {
    bool neg = false;
    if (accept('-')) neg = true;
    else accept('+');
    long v = small_int();
    return neg ? -v : v;
  }

  Rational rational_literal() {
    std::string num = digits();
    std::string den = "1";
    if (accept('/')) {
      int col = column();
      den = digits();
      if (den.find_first_not_of('0') == std::string::npos) throw ParseError("zero denominator", line_, col);
    }
    Rational r(num + "/" + den, 10);
    r.canonicalize();
    return r;
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, column()); }

private:
  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

namespace detail {

inline bool is_var_start(Cursor& c) { return c.peek() == 'z'; }

// var ('^' int)?, accumulating into exponent map
inline void parse_var_power(Cursor& c, std::map<std::size_t, int>& exps) {
  c.expect('z');
  if (!std::isdigit(static_cast<unsigned char>(c.peek_raw()))) c.fail("expected variable index after 'z'");
  int col = c.column();
  long idx = c.small_int();
  if (idx < 1) throw ParseError("variable indices start at 1", c.line(), col);
  int power = 1;
  if (c.accept('^')) {
    power = static_cast<int>(c.small_int());
  }
  exps[static_cast<std::size_t>(idx - 1)] += power;
}

}  // namespace detail

struct ParsedTerms {
  std::vector<std::pair<std::map<std::size_t, int>, Rational>> terms;
  std::size_t max_var = 0;  // number of variables referenced (max index)
};

inline ParsedTerms parse_terms(std::string_view text, int line = 1) {
  Cursor c(text, line);
  ParsedTerms out;
  if (c.at_end()) c.fail("empty polynomial");
  bool first = true;
  while (true) {
    Rational sign(1);
    if (c.accept('-')) sign = -1;
    else if (c.accept('+')) sign = 1;
    else if (!first) c.fail("expected '+' or '-'");
    first = false;
    if (c.at_end()) c.fail("expected term");
    Rational coeff(1);
    bool have_coeff = false;
    if (c.digit_next()) {
      coeff = c.rational_literal();
      have_coeff = true;
    }
    std::map<std::size_t, int> exps;
    bool have_mono = false;
    if (have_coeff && c.accept('*')) {
      if (!detail::is_var_start(c)) c.fail("expected variable after '*'");
    }
    if (detail::is_var_start(c)) {
      have_mono = true;
      detail::parse_var_power(c, exps);
      while (c.accept('*')) detail::parse_var_power(c, exps);
    }
    if (!have_coeff && !have_mono) c.fail("expected coefficient or variable");
    for (const auto& [k, v] : exps) out.max_var = std::max(out.max_var, k + 1);
    out.terms.emplace_back(exps, sign * coeff);
    if (c.at_end()) break;
    char nx = c.peek();
    if (nx != '+' && nx != '-') c.fail(std::string("unexpected character '") + nx + "'");
  }
  return out;
}

inline QPoly terms_to_polynomial(const ParsedTerms& t, std::size_t nvars) {
  QPoly p(nvars);
  for (const auto& [exps, c] : t.terms) {
    Exponent e(nvars, 0);
    for (const auto& [k, v] : exps) {
      if (k >= nvars) throw ValidationError("variable z" + std::to_string(k + 1) + " exceeds ambient dimension " + std::to_string(nvars));
      e[k] += v;
    }
    p.add_term(e, c);
  }
  return p;
}

// Parse using the grammar poly := term (('+'|'-') term)*. nvars = 0 infers from the text.
inline QPoly parse_polynomial(std::string_view text, std::size_t nvars = 0, int line = 1) {
  ParsedTerms t = parse_terms(text, line);
  return terms_to_polynomial(t, nvars == 0 ? std::max<std::size_t>(t.max_var, 1) : nvars);
}

}  // namespace conedef
