#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conedef/cech.hpp"
#include "conedef/cone_file.hpp"
#include "conedef/cone_metric.hpp"
#include "conedef/dbar.hpp"
#include "conedef/errors.hpp"
#include "conedef/graded_algebra.hpp"

namespace conedef::cli {

inline constexpr const char* version = "0.3.0";

enum class Format { Human, Kv };

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

inline std::string fmt_sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

struct Report {
  std::string command;
  std::uint64_t seed = 0;
  std::string source;  // file path or built-in example name
  std::string digest;
  std::vector<std::string> body;
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> hypotheses;
  std::vector<std::string> notes;

  void line(std::string s) { body.push_back(std::move(s)); }
  void put(std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); }
  void put(std::string k, double v) { kv.emplace_back(std::move(k), fmt(v, 12)); }
  void put(std::string k, long v) { kv.emplace_back(std::move(k), std::to_string(v)); }
  void put(std::string k, int v) { kv.emplace_back(std::move(k), std::to_string(v)); }
  void put(std::string k, std::size_t v) { kv.emplace_back(std::move(k), std::to_string(v)); }
  void put(std::string k, bool v) { kv.emplace_back(std::move(k), v ? "true" : "false"); }
  void put(std::string k, const char* v) { kv.emplace_back(std::move(k), v); }

  std::string render(Format f) const {
    std::ostringstream os;
    if (f == Format::Kv) {
      os << "version=" << version << "\ncommand=" << command << "\nseed=" << seed << "\nsource=" << source
         << "\ninput_digest=" << digest << "\n";
      for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
      for (std::size_t i = 0; i < hypotheses.size(); ++i) os << "hypothesis." << i << "=" << hypotheses[i] << "\n";
      for (std::size_t i = 0; i < notes.size(); ++i) os << "note." << i << "=" << notes[i] << "\n";
      return os.str();
    }
    os << "conedef " << version << "  " << command << "\n";
    os << "seed:   " << seed << "\n";
    os << "input:  " << source << " (fnv1a64 " << digest << ")\n\n";
    for (const auto& l : body) os << l << "\n";
    if (!hypotheses.empty()) {
      os << "\nassumed, not checked:\n";
      for (const auto& h : hypotheses) os << "  * " << h << "\n";
    }
    if (!notes.empty()) {
      os << "\nnotes:\n";
      for (const auto& n : notes) os << "  - " << n << "\n";
    }
    os << "\n";
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Built-in inputs

inline const std::map<std::string, std::string>& builtin_cones() {
  static const std::map<std::string, std::string> m{
      {"cubic", "[defining]\nz1^3+z2^3+z3^3+z4^3\n"},
      {"cubic-eps", "[defining]\nz1^3+z2^3+z3^3+z4^3\n[perturbation]\n1\n"},
      {"cubic-ak", "[defining]\nz1^3+z2^3+z3^3+z4^3\n[perturbation]\nz1+z2+z3+z4+1\n"},
      {"cubic-aij", "[defining]\nz1^3+z2^3+z3^3+z4^3\n[perturbation]\n"
                    "z1*z2+z1*z3+z1*z4+z2*z3+z2*z4+z3*z4+z1+z2+z3+z4+1\n"},
      {"ci", "[defining]\nz1^2+z2^2+z3^2+z4^2+z5^2\nz1^2+2*z2^2+3*z3^2+4*z4^2+5*z5^2\n[perturbation]\n-1\n-1\n"},
      {"odp3", "[defining]\nz1^2+z2^2+z3^2+z4^2\n[perturbation]\n1\n"},
      {"odp3-z3", "[defining]\nz1^2+z2^2+z3^2+z4^2\n[perturbation]\nz3\n"},
      {"odp4", "[defining]\nz1^2+z2^2+z3^2+z4^2+z5^2\n[perturbation]\n1\n"},
  };
  return m;
}

inline std::string builtin_names(const std::map<std::string, std::string>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += (s.empty() ? "" : ", ") + k;
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

struct Source {
  std::string name;
  std::string text;
};

inline Source cone_source(const std::string& path, const std::string& example) {
  if (!path.empty() && !example.empty()) throw InputError("give either an input file or --example, not both");
  if (!example.empty()) {
    auto it = builtin_cones().find(example);
    if (it == builtin_cones().end())
      throw InputError("unknown example '" + example + "' (known: " + builtin_names(builtin_cones()) + ")");
    return {"example:" + example, it->second};
  }
  if (path.empty()) throw InputError("an input file or --example is required");
  return {path, read_file(path)};
}

// ---------------------------------------------------------------------------
// Environment overrides

struct EnvDefault {
  const char* name;
  double fallback;
  const char* what;
};

inline const std::vector<EnvDefault>& env_defaults() {
  static const std::vector<EnvDefault> v{
      {"CONEDEF_FD_STEP", 1e-4, "finite-difference step for metric derivatives"},
      {"CONEDEF_NORMAL_TOL", 1e-12, "tolerance of the normalized-chart test"},
      {"CONEDEF_DBAR_TOL", 1e-10, "stopping tolerance of the Beltrami iteration"},
      {"CONEDEF_DBAR_MAXITER", 60, "iteration cap of the Beltrami iteration"},
  };
  return v;
}

inline double env_value(const char* name) {
  double fallback = 0;
  for (const auto& e : env_defaults())
    if (std::string(e.name) == name) fallback = e.fallback;
  const char* s = std::getenv(name);
  if (!s || !*s) return fallback;
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (*end != '\0' || !(v > 0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be a positive number, got '" + s + "'");
  return v;
}

inline std::string env_help() {
  std::string s = "Environment overrides for default tolerances:\n";
  for (const auto& e : env_defaults()) s += "  " + std::string(e.name) + " (default " + fmt(e.fallback) + "): " + e.what + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Small parsers for flag values

inline Rational parse_rational_flag(const std::string& s, const std::string& flag) {
  static const std::regex re(R"(^[+-]?\d+(/\d+)?$)");
  if (!std::regex_match(s, re)) throw InputError(flag + " expects p/q, got '" + s + "'");
  Rational q(s[0] == '+' ? s.substr(1) : s, 10);
  if (q.get_den() == 0) throw InputError(flag + ": zero denominator");
  q.canonicalize();
  return q;
}

inline double parse_double(const std::string& s, const std::string& flag) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InputError(flag + ": malformed number '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v)) throw InputError(flag + ": malformed number '" + s + "'");
  return v;
}

inline cd parse_pair(const std::string& s, const std::string& flag) {
  auto comma = s.find(',');
  if (comma == std::string::npos) return {parse_double(s, flag), 0.0};
  return {parse_double(s.substr(0, comma), flag), parse_double(s.substr(comma + 1), flag)};
}

// "x", "x+yi", "x-yi", "yi"
inline cd parse_complex(const std::string& s, const std::string& flag) {
  static const std::regex both(R"(^([+-]?[0-9.]+(?:[eE][+-]?\d+)?)([+-][0-9.]*(?:[eE][+-]?\d+)?)i$)");
  static const std::regex imag(R"(^([+-]?[0-9.]*(?:[eE][+-]?\d+)?)i$)");
  std::smatch m;
  auto im_part = [&](std::string t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_double(t, flag);
  };
  if (std::regex_match(s, m, both)) return {parse_double(m[1], flag), im_part(m[2])};
  if (std::regex_match(s, m, imag)) return {0.0, im_part(m[1])};
  return {parse_double(s, flag), 0.0};
}

inline GaussRational parse_gauss(const std::string& s) {
  std::string wrapped = "(" + s + ")";
  Cursor c(wrapped, 1);
  GaussRational v = detail::gauss_literal(c);
  c.skip_space();
  if (!c.at_end()) throw InputError("--kappa: malformed coefficient '" + s + "'");
  if (v.is_zero()) throw InputError("--kappa must be nonzero");
  return v;
}

inline std::pair<int, int> parse_range(const std::string& s, const std::string& flag) {
  static const std::regex re(R"(^(-?\d+)\.\.(-?\d+)$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw InputError(flag + " expects a..b, got '" + s + "'");
  int a = std::stoi(m[1]), b = std::stoi(m[2]);
  if (a > b) throw InputError(flag + ": empty range " + s);
  return {a, b};
}

inline std::string join_polys(const std::vector<QPoly>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].to_string();
  return s + ")";
}

inline std::string opt_weight(const std::optional<int>& w) { return w ? std::to_string(*w) : "none"; }

inline const char* verdict_name(WeightVerdict v) {
  switch (v) {
    case WeightVerdict::Weight: return "Weight";
    case WeightVerdict::FirstOrderVanishes: return "FirstOrderVanishes";
    case WeightVerdict::GenericityWarning: return "GenericityWarning";
  }
  return "?";
}

inline void cone_hypotheses(Report& r) {
  r.hypotheses.push_back("normality: the cone is normal with an isolated singularity at the origin");
}

// ---------------------------------------------------------------------------
// Options per subcommand

struct Global {
  std::uint64_t seed = 0;
  std::string format = "human";
  std::string output;
};

struct ConeOpts {
  std::string input;
  std::string example;
  int jmin = -6, jmax = 4;
  std::optional<int> n, weight;
  std::string alpha;
  std::optional<bool> compact;
  int instantiations = 3;
};

struct CechOpts {
  std::string input;
  std::string example;
  int order = 3;
  int target = -1;
  std::string kappa = "1";
  int normal_degree = 2;
};

struct MetricOpts {
  std::string delta = "1/2";
  int dim_d = 1;
  std::string potential;
  std::string xi = "1,0";
  std::vector<std::string> z;
  std::string sweep = "4..12";
  std::optional<double> mu;
  bool strict = false;
};

struct DbarOpts {
  std::string model = "const:0";
  std::optional<double> eta, nu;
  double alpha = 0.5;
  std::vector<double> R{0.4};
  int rings = 8;
  int angular = 64;
  int per_ring = 12;
  std::optional<double> tol;
  bool study = false;
  std::string report;
};

// ---------------------------------------------------------------------------
// Subcommand bodies

inline Report run_t1(const ConeOpts& o, const Global& g) {
  Source src = cone_source(o.input, o.example);
  ConeInput in = parse_cone_text(src.text);
  Report r;
  r.command = "t1";
  r.seed = g.seed;
  r.source = src.name;
  r.digest = hex64(fnv1a(src.text));
  cone_hypotheses(r);
  T1Report t = t1_graded(in.cone, o.jmin, o.jmax);
  r.line("N = " + std::to_string(in.cone.ambient_dim) + ", codim = " + std::to_string(in.cone.codim()));
  r.line("");
  r.line("weight  dim  rank  target");
  for (int j = t.j_min; j <= t.j_max; ++j) {
    std::ostringstream os;
    os << std::setw(6) << j << std::setw(5) << t.dimensions[j] << std::setw(6) << t.ranks[j] << std::setw(8) << t.target_dims[j];
    r.line(os.str());
  }
  for (int j = t.j_min; j <= t.j_max; ++j) {
    if (t.dimensions[j] == 0) continue;
    r.line("");
    r.line("basis of T1(" + std::to_string(j) + "):");
    for (const auto& b : t.bases[j]) r.line("  " + join_polys(b));
  }
  r.put("window.min", t.j_min);
  r.put("window.max", t.j_max);
  for (int j = t.j_min; j <= t.j_max; ++j) r.put("dim." + std::to_string(j), t.dimensions[j]);
  if (t.window) {
    r.put("support.min", t.window->first);
    r.put("support.max", t.window->second);
  } else {
    r.put("support", "empty");
  }
  return r;
}

inline WeightResult weight_section(Report& r, const ConeInput& in, const ConeOpts& o, const Global& g) {
  if (!in.perturbation) throw InputError("the input has no [perturbation] section");
  if (o.instantiations < 1) throw InputError("--instantiations must be at least 1");
  WeightResult w = deformation_weight(in.cone, *in.perturbation, g.seed, o.instantiations);
  r.hypotheses.push_back("genericity: " + std::to_string(o.instantiations) +
                         " random rescalings of the perturbation coefficients stand in for a generic perturbation");
  r.line("perturbation: " + join_polys(in.perturbation->components));
  r.line("verdict:      " + std::string(verdict_name(w.verdict)));
  r.line("weight:       " + opt_weight(w.weight));
  r.line("as given:     " + opt_weight(w.literal_weight));
  std::string inst;
  for (const auto& x : w.instantiations) inst += (inst.empty() ? "" : " ") + opt_weight(x);
  r.line("instances:    " + inst);
  r.line("search:       [" + std::to_string(w.search_window.first) + ", " + std::to_string(w.search_window.second) + "]");
  r.put("verdict", verdict_name(w.verdict));
  r.put("weight", opt_weight(w.weight));
  r.put("weight.literal", opt_weight(w.literal_weight));
  for (std::size_t i = 0; i < w.instantiations.size(); ++i) r.put("weight.instance." + std::to_string(i), opt_weight(w.instantiations[i]));
  for (const auto& n : w.notes) r.notes.push_back(n);
  return w;
}

inline Report run_weight(const ConeOpts& o, const Global& g) {
  Source src = cone_source(o.input, o.example);
  ConeInput in = parse_cone_text(src.text);
  Report r;
  r.command = "weight";
  r.seed = g.seed;
  r.source = src.name;
  r.digest = hex64(fnv1a(src.text));
  cone_hypotheses(r);
  weight_section(r, in, o, g);
  return r;
}

struct RateOutcome {
  Report report;
  bool refused = false;
  std::string reason;
};

inline RateOutcome run_rate(const ConeOpts& o, const Global& g) {
  Source src = cone_source(o.input, o.example);
  ConeInput in = parse_cone_text(src.text);
  RateOutcome out;
  Report& r = out.report;
  r.command = "rate";
  r.seed = g.seed;
  r.source = src.name;
  r.digest = hex64(fnv1a(src.text));
  cone_hypotheses(r);
  r.hypotheses.push_back("n >= 3: the weight/order correspondence behind the rate is proved only from dimension 3");
  r.hypotheses.push_back("Kaehler-Einstein metric: the link of the cone carries the cone metric the rate refers to");
  int weight = 0;
  if (o.weight) {
    weight = *o.weight;
    r.line("weight:       " + std::to_string(weight) + " (given)");
    r.put("weight", weight);
  } else {
    WeightResult w = weight_section(r, in, o, g);
    if (w.verdict != WeightVerdict::Weight) {
      out.refused = true;
      out.reason = std::string("no deformation weight (") + verdict_name(w.verdict) + "), so no rate";
      r.put("status", "refused");
      return out;
    }
    weight = *w.weight;
  }
  RateInput ri = rate_input_for(in.cone, weight, false);
  if (in.n) ri.n = *in.n;
  if (in.alpha) ri.alpha = *in.alpha;
  if (in.compact) ri.compactly_supported = *in.compact;
  if (o.n) ri.n = *o.n;
  if (!o.alpha.empty()) ri.alpha = parse_rational_flag(o.alpha, "--alpha");
  if (o.compact) ri.compactly_supported = *o.compact;
  RateResult rr = predicted_rate(ri);
  r.line("n:            " + std::to_string(ri.n));
  r.line("alpha:        " + to_string(ri.alpha));
  r.line("lambda:       " + to_string(rr.lambda1) + "  (n |w| / (alpha - 1))");
  r.line("metric rate:  " + to_string(rr.metric_rate) + (ri.compactly_supported ? "  (compactly supported)" : ""));
  r.put("n", ri.n);
  r.put("alpha", to_string(ri.alpha));
  r.put("lambda", to_string(rr.lambda1));
  r.put("metric_rate", to_string(rr.metric_rate));
  r.put("compact", ri.compactly_supported);
  r.put("status", "ok");
  for (const auto& n : rr.notes) r.notes.push_back(n);
  return out;
}

inline const std::map<std::string, std::string>& builtin_transitions() {
  static const std::map<std::string, std::string> m{
      {"p1p1-diagonal", "diagonal in P1 x P1, normal degree 2"},
      {"p2-conic", "conic in P2, normal degree 4"},
      {"linear", "linear model y2 = kappa z^-d y1, use --normal-degree and --kappa"},
  };
  return m;
}

inline Report run_cech(const CechOpts& o, const Global& g) {
  if (!o.input.empty() && !o.example.empty()) throw InputError("give either an input file or --example, not both");
  TruncatedTransition t;
  Source src;
  if (!o.example.empty()) {
    if (o.order < 2) throw InputError("--order must be at least 2");
    if (o.example == "p1p1-diagonal") {
      t = p1p1_diagonal_transition(o.order);
    } else if (o.example == "p2-conic") {
      t = p2_conic_transition(o.order);
    } else if (o.example == "linear") {
      if (o.normal_degree < 1) throw InputError("--normal-degree must be positive");
      t = linear_transition(o.order, o.normal_degree, parse_gauss(o.kappa));
    } else {
      throw InputError("unknown example '" + o.example + "' (known: " + builtin_names(builtin_transitions()) + ")");
    }
    src.name = "example:" + o.example + " order " + std::to_string(o.order);
    src.text = format_transition(t);
  } else {
    if (o.input.empty()) throw InputError("an input file or --example is required");
    src = {o.input, read_file(o.input)};
    t = parse_transition_text(src.text);
  }
  NormalizeResult res = normalize(t, o.target);
  Report r;
  r.command = "cech";
  r.seed = g.seed;
  r.source = src.name;
  r.digest = hex64(fnv1a(src.text));
  r.hypotheses.push_back("the curve D is a smooth P1 with the given normal degree; the transition is exact up to its truncation order");
  r.hypotheses.push_back("n >= 3 for reading the embedding order as a deformation weight");
  r.line("normal degree d = " + std::to_string(t.normal_degree) + ", truncation order " + std::to_string(t.order) +
         ", target order " + std::to_string(res.target_order));
  r.line("");
  auto chain_lines = [&](const Chain& c, const std::string& title) {
    r.line(title);
    r.line("  stage  twist  class                          verdict");
    for (const auto& s : c.stages) {
      std::string cls;
      for (const auto& x : s.class_text) cls += (cls.empty() ? "" : ", ") + x;
      if (cls.empty()) cls = "0";
      std::ostringstream os;
      os << "  " << std::left << std::setw(7) << stage_label(s.kind, s.k) << std::right << std::setw(5) << s.twist << "  "
         << std::left << std::setw(30) << ("[" + cls + "]") << " " << s.verdict;
      r.line(os.str());
      if (!s.locus.empty()) r.line("         locus: " + s.locus);
      if (s.new_parameters) r.line("         family: " + s.family.to_string());
      for (const auto& n : s.notes) r.line("         note: " + n);
    }
  };
  for (std::size_t i = 0; i < res.chains.size(); ++i) {
    const Chain& c = res.chains[i];
    chain_lines(c, "chain " + std::to_string(i) + (i == res.best ? " (best)" : "") + ": m(X,D) = " + std::to_string(c.m_xd()) +
                       ", splitting order " + std::to_string(c.splitting_order) + ", linearizable order " +
                       std::to_string(c.linearizable_order()) + (c.completed ? ", completed" : ", obstructed"));
    r.line("");
  }
  for (std::size_t i = 0; i < res.splitting_chains.size(); ++i) {
    const Chain& c = res.splitting_chains[i];
    chain_lines(c, "splitting-only chain " + std::to_string(i) + ": splits to order " + std::to_string(c.splitting_order));
    r.line("");
  }
  WeightFromOrder w = weight_from_order(res.m_xd, 1);
  r.line("m(X,D) = " + std::to_string(res.m_xd));
  r.line("linearizable order = " + std::to_string(res.linearizable_order));
  r.line("max splitting order = " + std::to_string(res.max_splitting_order));
  r.line("weight = " + std::to_string(w.weight));
  r.line("");
  r.line("normalized transition (free parameters at 0):");
  std::istringstream nt(format_transition(res.normalized));
  for (std::string l; std::getline(nt, l);) r.line("  " + l);

  r.put("m_xd", res.m_xd);
  r.put("linearizable_order", res.linearizable_order);
  r.put("max_splitting_order", res.max_splitting_order);
  r.put("weight", w.weight);
  r.put("target_order", res.target_order);
  r.put("chains", res.chains.size());
  for (std::size_t i = 0; i < res.chains.size(); ++i) {
    const Chain& c = res.chains[i];
    std::string p = "chain." + std::to_string(i) + ".";
    r.put(p + "m_xd", c.m_xd());
    r.put(p + "completed", c.completed);
    for (const auto& s : c.stages)
      if (!s.locus.empty()) r.put(p + stage_label(s.kind, s.k) + ".locus", s.locus);
  }
  for (std::size_t i = 0; i < res.splitting_chains.size(); ++i) {
    const Chain& c = res.splitting_chains[i];
    std::string p = "split." + std::to_string(i) + ".";
    r.put(p + "order", c.splitting_order);
    for (const auto& s : c.stages)
      if (!s.locus.empty()) r.put(p + stage_label(s.kind, s.k) + ".locus", s.locus);
  }
  for (const auto& n : res.notes) r.notes.push_back(n);
  for (const auto& n : w.notes) r.notes.push_back(n);
  return r;
}

inline std::vector<cd> parse_point(const std::vector<std::string>& z, std::size_t dim) {
  if (z.empty()) return std::vector<cd>(dim, cd(0));
  if (z.size() != dim) throw InputError("--z needs one value per coordinate (" + std::to_string(dim) + ")");
  std::vector<cd> out;
  for (const auto& s : z) out.push_back(parse_pair(s, "--z"));
  return out;
}

inline Report run_metric(const MetricOpts& o, const Global& g) {
  if (o.dim_d < 1) throw InputError("--dimD must be at least 1");
  std::size_t D = static_cast<std::size_t>(o.dim_d);
  Rational delta = parse_rational_flag(o.delta, "--delta");
  if (sgn(delta) <= 0) throw InputError("--delta must be positive");
  cd xi = parse_pair(o.xi, "--xi");
  if (std::abs(xi) == 0) throw InputError("--xi must be nonzero");
  auto [k0, k1] = parse_range(o.sweep, "--sweep");
  if (k1 - k0 < 2) throw InputError("--sweep needs at least three points");
  std::string pot_text = o.potential;
  if (pot_text.empty()) {
    pot_text = "1";
    for (std::size_t i = 0; i < D; ++i) pot_text += "+|z" + std::to_string(i + 1) + "|^2";
  }
  Potential pot = parse_potential(pot_text, D);
  pot.validate_hermitian();
  std::vector<cd> z = parse_point(o.z, D);
  double fd_step = env_value("CONEDEF_FD_STEP");
  double ntol = env_value("CONEDEF_NORMAL_TOL");

  Report r;
  r.command = "metric";
  r.seed = g.seed;
  r.source = "potential:" + pot_text;
  std::string key = pot_text + "|" + o.delta + "|" + std::to_string(D) + "|" + o.xi;
  for (const auto& s : o.z) key += "|" + s;
  r.digest = hex64(fnv1a(key));
  r.hypotheses.push_back("a is the potential of a hermitian metric on a negative line bundle: i ddbar log a > 0 is checked only at sampled points");
  if (o.mu) r.hypotheses.push_back("Kaehler-Einstein base: Ric(omega_D) = mu omega_D, tested through the Ricci identity below");

  double d = delta.get_d();
  PotentialJets j0 = jets_at(pot, z);
  NormalizationDefect nd = normalization_defect(j0);
  ConeChart chart{delta, D, z, xi, pot};
  if (nd.max() > ntol) {
    if (o.strict) throw NotNormalizedChart("chart is not normalized at the point (defect " + fmt_sci(nd.max()) + ")");
    NormalizedChart nc = normalize_chart(pot, z);
    chart.potential = nc.potential;
    chart.z.assign(D, cd(0));
    r.notes.push_back("chart was not normalized (defect " + fmt_sci(nd.max()) + "); moved to normalized coordinates, a(0) = " + fmt(nc.a0));
    r.put("renormalized", true);
  } else {
    r.put("renormalized", false);
  }
  const Potential& P = chart.potential;
  require_nondegenerate(P, d, chart.z, xi);
  MetricAtPoint m = metric_at(chart, ntol);
  r.line("cone metric with potential (a^delta |xi|^-2 delta), delta = " + to_string(delta) + ", D = " + std::to_string(D));
  r.line("point xi = " + fmt(xi.real()) + (xi.imag() >= 0 ? "+" : "") + fmt(xi.imag()) + "i");
  r.line("");
  r.line("g(xi, xibar)      = " + fmt(m.g(0, 0).real(), 10));
  r.line("g(z1, z1bar)      = " + fmt(m.g(1, 1).real(), 10));
  r.line("r = h^(delta/2)   = " + fmt(m.r, 10));
  r.line("|dxi|             = " + fmt(m.dxi_norm, 10));
  r.line("|dz1|             = " + fmt(m.dz_norm[0], 10));
  r.put("g.xixi", m.g(0, 0).real());
  r.put("g.z1z1", m.g(1, 1).real());
  r.put("r", m.r);
  r.put("gamma.xi.xixi.re", m.gamma[0][0][0].real());
  r.put("gamma.xi.xixi.im", m.gamma[0][0][0].imag());

  FDOptions fo;
  fo.step = fd_step;
  Christoffel fd = christoffel_fd(P, d, chart.z, xi, fo);
  double gdiff = christoffel_difference(m.gamma, fd);
  double dr2 = radial_gradient_norm2(P, d, chart.z, xi, fo);
  double ratio = derivative_norm_ratio(P, d, chart.z, xi, fo);
  double ratio_closed = std::sqrt(static_cast<double>(D) * d * d + (d + 1) * (d + 1)) / d;
  r.line("");
  r.line("Christoffel closed form vs finite differences: " + fmt_sci(gdiff));
  r.line("|dr| - 1:                                      " + fmt_sci(std::sqrt(dr2) - 1));
  r.line("r |grad d/dxi| / |d/dxi|:                      " + fmt(ratio, 8) + "  (closed form " + fmt(ratio_closed, 8) + ")");
  r.put("christoffel.fd_defect", gdiff);
  r.put("dr.defect", std::abs(std::sqrt(dr2) - 1));
  r.put("derivative_ratio", ratio);
  r.put("derivative_ratio.within_C4", ratio <= 4.0);
  if (ratio > 4.0) r.notes.push_back("derivative ratio " + fmt(ratio, 6) + " exceeds the repository bound C = 4 at this delta");

  auto slopes = scaling_slopes(chart, k0, k1);
  r.line("");
  r.line("scaling against the smooth comparison metric, xi = 2^-k, k = " + std::to_string(k0) + ".." + std::to_string(k1));
  r.line("  component          predicted      measured    rel.err");
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const auto& s = slopes[i];
    std::ostringstream os;
    os << "  " << std::left << std::setw(18) << s.name << std::right << std::setw(10) << fmt(s.predicted, 6) << std::setw(14)
       << fmt(s.measured, 6) << std::setw(11) << fmt_sci(s.relative_error());
    r.line(os.str());
    r.put("slope." + std::to_string(i) + ".predicted", s.predicted);
    r.put("slope." + std::to_string(i) + ".measured", s.measured);
  }

  if (o.mu) {
    std::vector<GridPoint> grid{{chart.z, xi}, {chart.z, xi * 0.7}};
    std::vector<cd> z2 = chart.z;
    z2[0] += cd(0.05, -0.03);
    grid.push_back({z2, xi * cd(0.6, 0.3)});
    CurvatureReport cr = curvature_check(P, d, *o.mu, grid, fo);
    r.line("");
    r.line("Ricci identity Ric = (mu - n delta) l, mu = " + fmt(*o.mu) + ": max defect " + fmt_sci(cr.max_value) +
           (cr.converged ? "" : "  (not converged)"));
    r.put("ricci.defect", cr.max_value);
    r.put("ricci.converged", cr.converged);
    r.put("calabi_delta", to_string(calabi_exponent(Rational(mpq_class(*o.mu)), o.dim_d)));
    for (const auto& n : cr.notes) r.notes.push_back(n);
  }
  return r;
}

inline dbar::PerturbationModel parse_model(const std::string& spec, std::optional<double> eta_flag, double& eta_out) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw InputError("--model expects const:<c> or power:<c>,<eta>");
  std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "const") {
    if (eta_flag && *eta_flag != 0) throw InputError("const model has eta = 0, but --eta " + fmt(*eta_flag) + " was given");
    eta_out = 0;
    return dbar::PerturbationModel::constant(parse_complex(arg, "--model"));
  }
  if (kind == "power") {
    auto comma = arg.find(',');
    cd c = parse_complex(arg.substr(0, comma), "--model");
    double eta = 0;
    if (comma != std::string::npos) {
      eta = parse_double(arg.substr(comma + 1), "--model");
      if (eta_flag && *eta_flag != eta) throw InputError("--eta disagrees with the eta in --model");
    } else if (eta_flag) {
      eta = *eta_flag;
    } else {
      throw InputError("power model needs an exponent: power:<c>,<eta> or --eta");
    }
    eta_out = eta;
    return dbar::PerturbationModel::power(c, eta);
  }
  throw InputError("unknown model '" + kind + "' (const or power)");
}

inline Report run_dbar(const DbarOpts& o, const Global& g) {
  double eta = 0;
  dbar::PerturbationModel model = parse_model(o.model, o.eta, eta);
  dbar::HolderParams hp;
  hp.alpha = o.alpha;
  hp.nu = o.nu ? *o.nu : eta / 2;
  hp.validate(eta);
  if (o.R.empty()) throw InputError("--R needs at least one radius");
  for (double R : o.R)
    if (!(R > 0) || R > 1) throw InputError("--R values must lie in (0, 1]");
  dbar::SolverOptions so;
  so.K = o.rings;
  so.M = o.angular;
  so.per_ring = o.per_ring;
  so.tol = o.tol ? *o.tol : env_value("CONEDEF_DBAR_TOL");
  so.max_iter = static_cast<int>(env_value("CONEDEF_DBAR_MAXITER"));
  if (!(so.tol > 0)) throw InputError("--tol must be positive");
  dbar::DiskGrid::make(o.R.front(), so.K, so.M, so.per_ring, so.degree);

  Report r;
  r.command = "dbar";
  r.seed = g.seed;
  r.source = "model:" + o.model;
  std::string key = o.model + "|" + fmt(hp.alpha, 17) + "|" + fmt(hp.nu, 17) + "|" + std::to_string(so.K) + "|" + std::to_string(so.M);
  for (double R : o.R) key += "|" + fmt(R, 17);
  r.digest = hex64(fnv1a(key));
  r.hypotheses.push_back("R small: replaced by the probe ||J[0]|| <= " + fmt(so.threshold) + " before iterating");
  r.hypotheses.push_back("one complex variable: the fixed-point solve is the n = 1 Beltrami case");

  r.line("model " + model.name + ", eta = " + fmt(eta) + ", nu = " + fmt(hp.nu) + ", alpha = " + fmt(hp.alpha) + ", rings K = " +
         std::to_string(so.K) + ", angular M = " + std::to_string(so.M) + ", tol = " + fmt_sci(so.tol));
  r.line("");
  r.line("      R │ iter │  residual │       sup │        D1 │  C1α ring │      J[0] │ decay");
  r.line("────────┼──────┼───────────┼───────────┼───────────┼───────────┼───────────┼──────");
  r.put("model", model.name);
  r.put("eta", eta);
  r.put("nu", hp.nu);
  r.put("alpha", hp.alpha);
  r.put("rows", o.R.size());
  for (std::size_t i = 0; i < o.R.size(); ++i) {
    dbar::BeltramiResult br = dbar::solve_beltrami(model, hp, o.R[i], so);
    std::ostringstream os;
    os << std::setw(7) << fmt(o.R[i], 4) << " │ " << std::setw(4) << br.iterations << " │ " << std::setw(9) << fmt_sci(br.residual)
       << " │ " << std::setw(9) << fmt_sci(br.norm.sup) << " │ " << std::setw(9) << fmt_sci(br.norm.d1) << " │ " << std::setw(9)
       << fmt_sci(br.ring.total) << " │ " << std::setw(9) << fmt_sci(br.j0_norm) << " │ " << fmt(br.decay_slope, 4);
    r.line(os.str());
    std::string p = "row." + std::to_string(i) + ".";
    r.put(p + "R", o.R[i]);
    r.put(p + "iterations", br.iterations);
    r.put(p + "residual", br.residual);
    r.put(p + "norm.sup", br.norm.sup);
    r.put(p + "norm.d1", br.norm.d1);
    r.put(p + "ring", br.ring.total);
    r.put(p + "j0", br.j0_norm);
    r.put(p + "decay_slope", br.decay_slope);
    for (const auto& n : br.notes) r.notes.push_back("R = " + fmt(o.R[i]) + ": " + n);
  }
  r.line("sup = sup |z - zeta| rho^-(nu+1), D1 = R sup |D z| rho^-nu, C1α ring = dyadic-ring C^{1,alpha}_{nu+1} norm,");
  r.line("J[0] = anisotropic norm of the first iterate, decay = log-log slope of ring sup |z - zeta|");
  if (o.study) {
    if (o.R.size() < 2) throw InputError("--study needs at least two radii");
    dbar::ContractionStudy st = dbar::contraction_study(model, hp, o.R, so, g.seed);
    r.line("");
    r.line("      R │    J[0] ring │   J[0] aniso │ Lipschitz");
    r.line("────────┼──────────────┼──────────────┼──────────");
    for (const auto& row : st.rows) {
      std::ostringstream os;
      os << std::setw(7) << fmt(row.R, 4) << " │ " << std::setw(12) << fmt_sci(row.j0_ring) << " │ " << std::setw(12)
         << fmt_sci(row.j0_aniso) << " │ " << fmt_sci(row.lipschitz);
      r.line(os.str());
    }
    r.line("log-log slopes: J[0] " + fmt(st.j0_slope, 4) + ", Lipschitz " + fmt(st.lipschitz_slope, 4));
    r.put("study.j0_slope", st.j0_slope);
    r.put("study.lipschitz_slope", st.lipschitz_slope);
  }
  r.put("status", "ok");
  return r;
}

// ---------------------------------------------------------------------------
// Dispatch

inline int emit(const Report& r, const Global& g, std::ostream& out, std::ostream& err) {
  Format f = g.format == "kv" ? Format::Kv : Format::Human;
  std::string text = r.render(f);
  if (g.output.empty()) {
    out << text;
    return 0;
  }
  std::ofstream file(g.output, std::ios::binary);
  if (!file) {
    err << "error: cannot write " << g.output << "\n";
    return 1;
  }
  file << text;
  out << "report written to " << g.output << "\n";
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"conedef: deformation invariants of cone singularities and numerical checks of cone metrics and dbar operators"};
  app.footer(env_help());
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "random seed for genericity checks and probes")->capture_default_str();
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"human", "kv"}))->capture_default_str();
  app.add_option("-o,--output", g.output, "write the report to this file");
  app.set_version_flag("--version", version);

  ConeOpts cone;
  auto add_cone_input = [&](CLI::App* s) {
    s->add_option("input", cone.input, "cone file");
    s->add_option("--example", cone.example, "built-in cone: " + builtin_names(builtin_cones()));
  };
  auto* t1 = app.add_subcommand("t1", "graded T1 dimensions and bases");
  add_cone_input(t1);
  t1->add_option("--jmin", cone.jmin, "lowest weight")->capture_default_str();
  t1->add_option("--jmax", cone.jmax, "highest weight")->capture_default_str();

  auto* wt = app.add_subcommand("weight", "deformation weight of the perturbation");
  add_cone_input(wt);
  wt->add_option("--instantiations", cone.instantiations, "random generic instantiations")->capture_default_str();

  auto* rate = app.add_subcommand("rate", "predicted decay rate from the deformation weight");
  add_cone_input(rate);
  rate->add_option("--instantiations", cone.instantiations, "random generic instantiations")->capture_default_str();
  rate->add_option("--weight", cone.weight, "use this weight instead of computing it");
  rate->add_option("--n", cone.n, "complex dimension of the cone");
  rate->add_option("--alpha", cone.alpha, "index alpha (rational)");
  rate->add_option("--compact", cone.compact, "compactly supported perturbation (true/false)");

  CechOpts cech;
  auto* cc = app.add_subcommand("cech", "embedding order of a curve from its transition functions");
  cc->add_option("input", cech.input, "transition file");
  cc->add_option("--example", cech.example, "built-in transition: " + builtin_names(builtin_transitions()));
  cc->add_option("--order", cech.order, "truncation order of built-in examples")->capture_default_str();
  cc->add_option("--target", cech.target, "target order (default: truncation order - 1)");
  cc->add_option("--normal-degree", cech.normal_degree, "normal degree for the linear example")->capture_default_str();
  cc->add_option("--kappa", cech.kappa, "coefficient for the linear example")->capture_default_str();

  MetricOpts met;
  auto* mt = app.add_subcommand("metric", "Calabi-ansatz cone metric checks at a point");
  mt->add_option("--delta", met.delta, "cone exponent p/q")->capture_default_str();
  mt->add_option("--dimD", met.dim_d, "dimension of the base")->capture_default_str();
  mt->add_option("--potential", met.potential, "fibre metric a(z, zbar), e.g. 1+|z|^2 (default)");
  mt->add_option("--xi", met.xi, "fibre coordinate re,im")->capture_default_str();
  mt->add_option("--z", met.z, "base point, one re,im per coordinate (default 0)");
  mt->add_option("--sweep", met.sweep, "scaling sweep xi = 2^-k, k0..k1")->capture_default_str();
  mt->add_option("--mu", met.mu, "Einstein constant of the base, enables the Ricci check");
  mt->add_flag("--strict", met.strict, "fail instead of renormalizing the chart");

  DbarOpts db;
  auto* dc = app.add_subcommand("dbar", "Beltrami fixed-point solve with the modified Cauchy transform");
  dc->add_option("--model", db.model, "const:<c> or power:<c>,<eta>; c may be x, x+yi")->capture_default_str();
  dc->add_option("--eta", db.eta, "decay exponent of the coefficient");
  dc->add_option("--nu", db.nu, "weight, 0 < nu < eta (default eta/2)");
  dc->add_option("--alpha", db.alpha, "Hoelder exponent")->capture_default_str();
  dc->add_option("--R", db.R, "disk radius, repeatable or comma separated")->delimiter(',')->capture_default_str();
  dc->add_option("--rings", db.rings, "dyadic rings K")->capture_default_str();
  dc->add_option("--angular", db.angular, "angular points M")->capture_default_str();
  dc->add_option("--per-ring", db.per_ring, "radial points per ring")->capture_default_str();
  dc->add_option("--tol", db.tol, "iteration tolerance (default CONEDEF_DBAR_TOL)");
  dc->add_flag("--study", db.study, "contraction study across the radii");
  dc->add_option("--report", db.report, "write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    if (*t1) return emit(run_t1(cone, g), g, out, err);
    if (*wt) return emit(run_weight(cone, g), g, out, err);
    if (*rate) {
      RateOutcome ro = run_rate(cone, g);
      int code = emit(ro.report, g, out, err);
      if (ro.refused) {
        err << "refused: " << ro.reason << "\n";
        return 2;
      }
      return code;
    }
    if (*cc) return emit(run_cech(cech, g), g, out, err);
    if (*mt) return emit(run_metric(met, g), g, out, err);
    if (*dc) {
      if (!db.report.empty()) {
        if (!g.output.empty() && g.output != db.report) throw InputError("--report and --output name different files");
        g.output = db.report;
      }
      return emit(run_dbar(db, g), g, out, err);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Refused& e) {
    err << "refused: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace conedef::cli
