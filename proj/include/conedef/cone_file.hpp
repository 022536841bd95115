#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/graded_algebra.hpp"
#include "conedef/parse.hpp"

namespace conedef {

struct ConeInput {
  ConeSingularity cone;
  std::optional<Perturbation> perturbation;
  std::optional<int> n;
  std::optional<Rational> alpha;
  std::optional<bool> compact;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct PolyLine {
  ParsedTerms terms;
  std::optional<int> declared_degree;
  int line = 0;
};

// "<poly>" or "<poly> ; deg=<int>"
inline PolyLine parse_poly_line(const std::string& raw, int line) {
  PolyLine pl;
  pl.line = line;
  std::string body = raw;
  auto semi = raw.find(';');
  if (semi != std::string::npos) {
    body = raw.substr(0, semi);
    Cursor c(std::string_view(raw).substr(semi + 1), line);
    c.skip_space();
    for (char ch : std::string("deg")) {
      if (!c.accept(ch)) throw ParseError("expected 'deg=<int>' after ';'", line, static_cast<int>(semi) + 1 + c.column());
    }
    c.expect('=');
    pl.declared_degree = static_cast<int>(c.small_int());
    if (!c.at_end()) throw ParseError("trailing characters after degree", line, static_cast<int>(semi) + 1 + c.column());
  }
  pl.terms = parse_terms(body, line);
  return pl;
}

inline void parse_params(const std::string& text, int line, ConeInput& in) {
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok + "'", line, 1);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    try {
      if (key == "n") {
        in.n = std::stoi(val);
      } else if (key == "alpha") {
        Rational a(val, 10);
        a.canonicalize();
        in.alpha = a;
      } else if (key == "compact") {
        if (val == "true" || val == "1") in.compact = true;
        else if (val == "false" || val == "0") in.compact = false;
        else throw ParseError("compact must be true or false", line, 1);
      } else {
        throw ParseError("unknown parameter '" + key + "'", line, 1);
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed value for '" + key + "'", line, 1);
    }
  }
}

}  // namespace detail

inline ConeInput parse_cone_text(const std::string& text) {
  std::istringstream ss(text);
  std::string raw;
  int line = 0;
  enum class Section { None, Defining, Perturbation, Params } section = Section::None;
  std::vector<detail::PolyLine> defining, perturbation;
  ConeInput in;
  bool saw_perturbation = false;
  while (std::getline(ss, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string nocomment = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::string body = detail::trim(nocomment);
    if (body.empty()) continue;
    if (body.front() == '[') {
      auto close = body.find(']');
      if (close == std::string::npos) throw ParseError("unterminated section header", line, static_cast<int>(body.size()) + 1);
      std::string name = body.substr(1, close - 1);
      std::string rest = detail::trim(body.substr(close + 1));
      if (name == "defining") section = Section::Defining;
      else if (name == "perturbation") section = Section::Perturbation, saw_perturbation = true;
      else if (name == "params") section = Section::Params;
      else throw ParseError("unknown section [" + name + "]", line, 2);
      if (!rest.empty()) {
        if (section != Section::Params) throw ParseError("unexpected text after section header", line, static_cast<int>(close) + 2);
        detail::parse_params(rest, line, in);
      }
      continue;
    }
    switch (section) {
      case Section::None: throw ParseError("content before any section header", line, 1);
      case Section::Defining: defining.push_back(detail::parse_poly_line(nocomment, line)); break;
      case Section::Perturbation: perturbation.push_back(detail::parse_poly_line(nocomment, line)); break;
      case Section::Params: detail::parse_params(body, line, in); break;
    }
  }
  if (defining.empty()) throw ValidationError("no [defining] polynomials");
  std::size_t n = 0;
  for (const auto& pl : defining) n = std::max(n, pl.terms.max_var);
  in.cone.ambient_dim = n;
  for (const auto& pl : defining) {
    QPoly f = terms_to_polynomial(pl.terms, n);
    if (!f.is_homogeneous()) throw ValidationError("line " + std::to_string(pl.line) + ": defining polynomial is not homogeneous");
    if (pl.declared_degree && *pl.declared_degree != f.degree())
      throw DegreeMismatch("line " + std::to_string(pl.line) + ": declared degree " + std::to_string(*pl.declared_degree) +
                           " but polynomial has degree " + std::to_string(f.degree()));
    in.cone.defining.push_back(f);
    in.cone.degrees.push_back(f.degree());
  }
  in.cone.validate();
  if (saw_perturbation) {
    if (perturbation.size() != defining.size())
      throw ValidationError("[perturbation] needs exactly one line per defining polynomial");
    Perturbation p;
    for (const auto& pl : perturbation) {
      QPoly g = terms_to_polynomial(pl.terms, n);
      int deg = std::max(g.degree(), 0);
      if (pl.declared_degree) {
        if (*pl.declared_degree != deg)
          throw DegreeMismatch("line " + std::to_string(pl.line) + ": declared degree " + std::to_string(*pl.declared_degree) +
                               " but polynomial has degree " + std::to_string(deg));
      }
      p.components.push_back(g);
      p.declared_degrees.push_back(deg);
    }
    p.validate(in.cone);
    in.perturbation = p;
  }
  return in;
}

inline ConeInput parse_cone_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_cone_text(buf.str());
}

}  // namespace conedef
