#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "conedef/errors.hpp"
#include "conedef/linalg.hpp"
#include "conedef/polynomial.hpp"
#include "conedef/rational.hpp"

namespace conedef {

struct ConeSingularity {
  std::size_t ambient_dim = 0;
  std::vector<QPoly> defining;
  std::vector<int> degrees;

  std::size_t codim() const { return defining.size(); }
  int max_degree() const { return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end()); }
  int min_degree() const { return degrees.empty() ? 0 : *std::min_element(degrees.begin(), degrees.end()); }
  int degree_sum() const {
    int s = 0;
    for (int d : degrees) s += d;
    return s;
  }

  void validate() const {
    if (ambient_dim == 0) throw ValidationError("ambient dimension must be positive");
    if (defining.empty() || defining.size() >= ambient_dim)
      throw ValidationError("codimension must satisfy 1 <= m < N");
    if (degrees.size() != defining.size()) throw ValidationError("one degree per defining polynomial");
    for (std::size_t i = 0; i < defining.size(); ++i) {
      const QPoly& f = defining[i];
      if (f.nvars() != ambient_dim) throw ValidationError("defining polynomial has wrong variable count");
      if (f.is_zero()) throw ValidationError("defining polynomial is zero");
      if (!f.is_homogeneous()) throw ValidationError("F" + std::to_string(i + 1) + " is not homogeneous");
      if (f.degree() != degrees[i] || degrees[i] <= 0)
        throw DegreeMismatch("F" + std::to_string(i + 1) + " has degree " + std::to_string(f.degree()) +
                             ", declared " + std::to_string(degrees[i]));
    }
  }
};

inline ConeSingularity make_cone(std::size_t ambient_dim, std::vector<QPoly> defining) {
  ConeSingularity c;
  c.ambient_dim = ambient_dim;
  for (auto& f : defining) {
    if (f.nvars() != ambient_dim) f = f.extended(ambient_dim);
    c.degrees.push_back(f.degree());
  }
  c.defining = std::move(defining);
  c.validate();
  return c;
}

struct Perturbation {
  std::vector<QPoly> components;
  std::vector<int> declared_degrees;

  void validate(const ConeSingularity& cone) const {
    if (components.size() != cone.codim())
      throw ValidationError("perturbation needs one component per defining polynomial");
    if (declared_degrees.size() != components.size()) throw ValidationError("one declared degree per component");
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (components[i].nvars() != cone.ambient_dim) throw ValidationError("perturbation has wrong variable count");
      if (components[i].degree() > declared_degrees[i])
        throw DegreeMismatch("G" + std::to_string(i + 1) + " has degree " + std::to_string(components[i].degree()) +
                             " above declared " + std::to_string(declared_degrees[i]));
      if (declared_degrees[i] >= cone.degrees[i])
        throw DegreeMismatch("G" + std::to_string(i + 1) + " must have degree below d" + std::to_string(i + 1));
    }
  }
};

inline Perturbation make_perturbation(const ConeSingularity& cone, std::vector<QPoly> comps) {
  Perturbation p;
  for (auto& g : comps) {
    if (g.nvars() != cone.ambient_dim) g = g.extended(cone.ambient_dim);
    p.declared_degrees.push_back(std::max(g.degree(), 0));
  }
  p.components = std::move(comps);
  p.validate(cone);
  return p;
}

struct GradedBasis {
  int degree = 0;
  std::vector<QPoly> representatives;
  std::size_t ambient_dim = 0;  // dim C[Z]_j
  std::size_t quotient_dim = 0;
};

// Degree-j piece of C[Z]/(F_1..F_m) by graded linear algebra.
struct GradedPiece {
  int degree = 0;
  std::vector<Exponent> monomials;  // descending degrevlex
  std::map<Exponent, std::size_t> column;
  Echelon<Rational> ideal;
  std::vector<std::size_t> basis_columns;  // standard monomials
  std::size_t ideal_rank() const { return ideal.rank(); }
  std::size_t quotient_dim() const { return basis_columns.size(); }
};

class GradedRing {
public:
  explicit GradedRing(ConeSingularity cone) : cone_(std::move(cone)) { cone_.validate(); }

  const ConeSingularity& cone() const { return cone_; }

  const GradedPiece& piece(int j) {
    auto it = pieces_.find(j);
    if (it != pieces_.end()) return *it->second;
    auto p = std::make_unique<GradedPiece>();
    p->degree = j;
    if (j >= 0) {
      std::size_t n = cone_.ambient_dim;
      p->monomials = monomials_of_degree(n, j);
      for (std::size_t k = 0; k < p->monomials.size(); ++k) p->column[p->monomials[k]] = k;
      std::vector<QPoly> gens;
      for (std::size_t i = 0; i < cone_.codim(); ++i) {
        int md = j - cone_.degrees[i];
        if (md < 0) continue;
        for (const auto& m : monomials_of_degree(n, md)) gens.push_back(QPoly::monomial(m, Rational(1)) * cone_.defining[i]);
      }
      Matrix<Rational> mat(gens.size(), p->monomials.size());
      for (std::size_t r = 0; r < gens.size(); ++r)
        for (const auto& [e, c] : gens[r].terms()) mat(r, p->column.at(e)) = c;
      p->ideal = rref(std::move(mat));
      if (gens.empty()) p->ideal.reduced = Matrix<Rational>(0, p->monomials.size());
      p->basis_columns = p->ideal.free_columns();
    }
    const GradedPiece& ref = *p;
    pieces_[j] = std::move(p);
    return ref;
  }

  std::size_t quotient_dim(int j) { return piece(j).quotient_dim(); }

  // Coordinates of a homogeneous degree-j polynomial in the standard-monomial basis of R(j).
  std::vector<Rational> coordinates(const QPoly& f, int j) {
    const GradedPiece& p = piece(j);
    if (j < 0) return {};
    std::vector<Rational> v(p.monomials.size(), Rational(0));
    for (const auto& [e, c] : f.terms()) {
      if (total_degree(e) != j) throw DegreeMismatch("polynomial is not homogeneous of degree " + std::to_string(j));
      v[p.column.at(e)] = c;
    }
    p.ideal.reduce(v);
    std::vector<Rational> out;
    out.reserve(p.basis_columns.size());
    for (auto col : p.basis_columns) out.push_back(v[col]);
    return out;
  }

  QPoly representative(int j, std::size_t k) {
    const GradedPiece& p = piece(j);
    return QPoly::monomial(p.monomials.at(p.basis_columns.at(k)), Rational(1));
  }

  GradedBasis basis(int j) {
    GradedBasis b;
    b.degree = j;
    if (j < 0) return b;
    const GradedPiece& p = piece(j);
    b.ambient_dim = p.monomials.size();
    for (std::size_t k = 0; k < p.basis_columns.size(); ++k) b.representatives.push_back(representative(j, k));
    b.quotient_dim = b.representatives.size();
    return b;
  }

private:
  ConeSingularity cone_;
  std::map<int, std::unique_ptr<GradedPiece>> pieces_;
};

inline GradedBasis quotient_basis(const ConeSingularity& cone, int j) {
  GradedRing ring(cone);
  return ring.basis(j);
}

// Matrix of R(j+1)^N -> (+)_i R(d_i + j), v_l |-> (sum_l v_l dF_i/dz_l)_i.
inline Matrix<Rational> jacobian_matrix(GradedRing& ring, int j) {
  const ConeSingularity& cone = ring.cone();
  std::size_t n = cone.ambient_dim;
  std::size_t src = ring.quotient_dim(j + 1);
  std::vector<std::size_t> offset;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < cone.codim(); ++i) {
    offset.push_back(rows);
    rows += ring.quotient_dim(cone.degrees[i] + j);
  }
  Matrix<Rational> m(rows, n * src);
  if (src == 0 || rows == 0) return m;
  std::vector<std::vector<QPoly>> partials(cone.codim());
  for (std::size_t i = 0; i < cone.codim(); ++i)
    for (std::size_t l = 0; l < n; ++l) partials[i].push_back(cone.defining[i].derivative(l));
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t b = 0; b < src; ++b) {
      QPoly rep = ring.representative(j + 1, b);
      std::size_t col = l * src + b;
      for (std::size_t i = 0; i < cone.codim(); ++i) {
        int deg = cone.degrees[i] + j;
        if (ring.quotient_dim(deg) == 0) continue;
        QPoly img = partials[i][l] * rep;
        if (img.is_zero()) continue;
        auto coords = ring.coordinates(img, deg);
        for (std::size_t r = 0; r < coords.size(); ++r) m(offset[i] + r, col) = coords[r];
      }
    }
  return m;
}

inline Matrix<Rational> jacobian_matrix(const ConeSingularity& cone, int j) {
  GradedRing ring(cone);
  return jacobian_matrix(ring, j);
}

struct T1Piece {
  int weight = 0;
  std::size_t target_dim = 0;  // dim (+)_i R(d_i + j)
  std::size_t source_dim = 0;  // dim R(j+1)^N
  std::size_t rank = 0;        // rank of the Jacobian map
  std::size_t dimension = 0;   // size of the explicit cokernel basis
  std::vector<std::vector<QPoly>> basis;
  std::vector<std::size_t> offsets;  // start of each component in target coordinates
  Echelon<Rational> image;           // echelon form of the image, rows are image vectors
  std::vector<std::size_t> cokernel_coords;
};

class T1Engine {
public:
  explicit T1Engine(ConeSingularity cone) : ring_(std::move(cone)) {}

  GradedRing& ring() { return ring_; }
  const ConeSingularity& cone() const { return ring_.cone(); }

  const T1Piece& piece(int j) {
    auto it = pieces_.find(j);
    if (it != pieces_.end()) return *it->second;
    auto p = std::make_unique<T1Piece>();
    p->weight = j;
    const ConeSingularity& c = ring_.cone();
    std::size_t rows = 0;
    for (std::size_t i = 0; i < c.codim(); ++i) {
      p->offsets.push_back(rows);
      rows += ring_.quotient_dim(c.degrees[i] + j);
    }
    p->target_dim = rows;
    p->source_dim = c.ambient_dim * ring_.quotient_dim(j + 1);
    Matrix<Rational> jac = jacobian_matrix(ring_, j);
    p->rank = rank(jac);
    p->image = rref(jac.transpose());
    if (jac.cols() == 0) p->image.reduced = Matrix<Rational>(0, rows);
    p->cokernel_coords = p->image.free_columns();
    p->dimension = p->cokernel_coords.size();
    for (std::size_t coord : p->cokernel_coords) {
      std::vector<QPoly> elt;
      for (std::size_t i = 0; i < c.codim(); ++i) {
        std::size_t lo = p->offsets[i];
        std::size_t hi = i + 1 < c.codim() ? p->offsets[i + 1] : rows;
        if (coord >= lo && coord < hi) elt.push_back(ring_.representative(c.degrees[i] + j, coord - lo));
        else elt.push_back(QPoly(c.ambient_dim));
      }
      p->basis.push_back(std::move(elt));
    }
    const T1Piece& ref = *p;
    pieces_[j] = std::move(p);
    return ref;
  }

  // Target-space coordinates of an m-tuple whose i-th entry is homogeneous of degree d_i + j.
  std::vector<Rational> target_vector(const std::vector<QPoly>& element, int j) {
    const ConeSingularity& c = ring_.cone();
    const T1Piece& p = piece(j);
    std::vector<Rational> v(p.target_dim, Rational(0));
    for (std::size_t i = 0; i < c.codim(); ++i) {
      int deg = c.degrees[i] + j;
      if (ring_.quotient_dim(deg) == 0) continue;
      auto coords = ring_.coordinates(element[i], deg);
      for (std::size_t r = 0; r < coords.size(); ++r) v[p.offsets[i] + r] = coords[r];
    }
    return v;
  }

  std::vector<Rational> cokernel_coordinates(std::vector<Rational> v, int j) {
    const T1Piece& p = piece(j);
    p.image.reduce(v);
    std::vector<Rational> out;
    for (auto k : p.cokernel_coords) out.push_back(v[k]);
    return out;
  }

private:
  GradedRing ring_;
  std::map<int, std::unique_ptr<T1Piece>> pieces_;
};

struct T1Report {
  int j_min = 0;
  int j_max = 0;
  std::map<int, std::size_t> dimensions;
  std::map<int, std::vector<std::vector<QPoly>>> bases;
  std::map<int, std::size_t> ranks;
  std::map<int, std::size_t> target_dims;
  std::optional<std::pair<int, int>> window;  // smallest interval holding every nonzero piece
};

inline T1Report t1_graded(T1Engine& engine, int j_min, int j_max) {
  if (j_min > j_max) throw ValidationError("j_min must not exceed j_max");
  T1Report r;
  r.j_min = j_min;
  r.j_max = j_max;
  for (int j = j_min; j <= j_max; ++j) {
    const T1Piece& p = engine.piece(j);
    r.dimensions[j] = p.dimension;
    r.bases[j] = p.basis;
    r.ranks[j] = p.rank;
    r.target_dims[j] = p.target_dim;
    if (p.dimension > 0) {
      if (!r.window) r.window = std::make_pair(j, j);
      r.window->second = j;
    }
  }
  return r;
}

inline T1Report t1_graded(const ConeSingularity& cone, int j_min, int j_max) {
  T1Engine engine(cone);
  return t1_graded(engine, j_min, j_max);
}

struct T1Class {
  bool zero = true;
  std::vector<Rational> coordinates;
};

inline T1Class reduce_in_t1(T1Engine& engine, const std::vector<QPoly>& element, int j) {
  const ConeSingularity& c = engine.cone();
  if (element.size() != c.codim()) throw ValidationError("element needs one entry per defining polynomial");
  bool all_zero = true;
  bool any_part = false;
  std::vector<QPoly> projected;
  for (std::size_t i = 0; i < c.codim(); ++i) {
    const QPoly& g = element[i].nvars() == c.ambient_dim ? element[i] : element[i].extended(c.ambient_dim);
    if (!g.is_zero()) all_zero = false;
    QPoly part = g.homogeneous_part(c.degrees[i] + j);
    if (!part.is_zero()) any_part = true;
    projected.push_back(part);
  }
  T1Class out;
  out.coordinates.assign(engine.piece(j).dimension, Rational(0));
  if (all_zero) return out;
  if (!any_part) throw DegreeMismatch("no component has a part of degree d_i + " + std::to_string(j));
  out.coordinates = engine.cokernel_coordinates(engine.target_vector(projected, j), j);
  out.zero = std::all_of(out.coordinates.begin(), out.coordinates.end(), [](const Rational& x) { return sgn(x) == 0; });
  return out;
}

inline T1Class reduce_in_t1(const ConeSingularity& cone, const std::vector<QPoly>& element, int j) {
  T1Engine engine(cone);
  return reduce_in_t1(engine, element, j);
}

enum class WeightVerdict { Weight, FirstOrderVanishes, GenericityWarning };

struct WeightResult {
  WeightVerdict verdict = WeightVerdict::FirstOrderVanishes;
  std::optional<int> weight;
  std::optional<int> literal_weight;                 // the perturbation exactly as given
  std::vector<std::optional<int>> instantiations;    // random generic rescalings
  std::pair<int, int> search_window{0, 0};
  std::vector<std::string> notes;
};

// Highest-weight part of G and its class: nullopt when that class is zero in T^1.
inline std::optional<int> top_weight_class(T1Engine& engine, const std::vector<QPoly>& g) {
  const ConeSingularity& c = engine.cone();
  std::optional<int> top;
  for (std::size_t i = 0; i < c.codim(); ++i) {
    if (g[i].is_zero()) continue;
    int w = g[i].degree() - c.degrees[i];
    if (!top || w > *top) top = w;
  }
  if (!top) return std::nullopt;
  T1Class cls = reduce_in_t1(engine, g, *top);
  if (cls.zero) return std::nullopt;
  return top;
}

inline Rational random_nonzero_rational(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(1, 9), den(1, 9), sign(0, 1);
  Rational r(num(rng) * (sign(rng) ? 1 : -1), den(rng));
  r.canonicalize();
  return r;
}

inline std::vector<QPoly> generic_instance(const std::vector<QPoly>& g, std::mt19937_64& rng) {
  std::vector<QPoly> out;
  for (const auto& p : g) {
    QPoly q(p.nvars());
    for (const auto& [e, c] : p.terms()) q.add_term(e, c * random_nonzero_rational(rng));
    out.push_back(q);
  }
  return out;
}

inline const char* completing_square_note() {
  return "first-order class of the top-weight part vanishes; a coordinate change (completing the square) "
         "can move the deformation to another weight, so no weight is reported";
}

inline WeightResult deformation_weight(T1Engine& engine, const Perturbation& pert, std::uint64_t seed = 0,
                                       int instantiations = 3) {
  const ConeSingularity& c = engine.cone();
  pert.validate(c);
  WeightResult r;
  int max_e = *std::max_element(pert.declared_degrees.begin(), pert.declared_degrees.end());
  r.search_window = {-c.max_degree(), max_e - c.min_degree()};
  r.literal_weight = top_weight_class(engine, pert.components);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < instantiations; ++k)
    r.instantiations.push_back(top_weight_class(engine, generic_instance(pert.components, rng)));
  bool agree = std::all_of(r.instantiations.begin(), r.instantiations.end(),
                           [&](const std::optional<int>& w) { return w == r.instantiations.front(); });
  if (!agree) {
    r.verdict = WeightVerdict::GenericityWarning;
    r.notes.push_back("GenericityWarning: random instantiations disagree on the weight");
    return r;
  }
  if (!r.instantiations.front()) {
    r.verdict = WeightVerdict::FirstOrderVanishes;
    r.notes.push_back(std::string("FirstOrderVanishes: ") + completing_square_note());
    return r;
  }
  r.verdict = WeightVerdict::Weight;
  r.weight = r.instantiations.front();
  if (r.literal_weight != r.weight)
    r.notes.push_back("the perturbation as given is not generic: its own class gives a different verdict");
  return r;
}

inline WeightResult deformation_weight(const ConeSingularity& cone, const Perturbation& pert, std::uint64_t seed = 0,
                                       int instantiations = 3) {
  T1Engine engine(cone);
  return deformation_weight(engine, pert, seed, instantiations);
}

struct RateInput {
  int n = 0;
  Rational alpha;
  int weight_abs = 0;
  bool compactly_supported = false;
};

struct RateResult {
  Rational lambda1;
  Rational metric_rate;
  std::vector<std::string> notes;
};

inline RateResult predicted_rate(const RateInput& in) {
  if (in.alpha <= 1) throw ValidationError("alpha must exceed 1");
  if (in.n < 2) throw ValidationError("n must be at least 2");
  if (in.weight_abs < 1) throw ValidationError("|w| must be at least 1");
  RateResult r;
  r.lambda1 = Rational(in.n * in.weight_abs) / (in.alpha - 1);
  r.lambda1.canonicalize();
  Rational cap = in.compactly_supported ? Rational(2 * in.n) : Rational(2);
  r.metric_rate = r.lambda1 < cap ? r.lambda1 : cap;
  if (in.n == 2) r.notes.push_back("n = 2: the weight/order correspondence is only expected, not proved, in this dimension");
  return r;
}

// n = dim X = N - m and alpha = N + 1 - sum d_i for the projective closure of the cone.
inline RateInput rate_input_for(const ConeSingularity& cone, int weight, bool compact) {
  RateInput in;
  in.n = static_cast<int>(cone.ambient_dim) - static_cast<int>(cone.codim());
  in.alpha = Rational(static_cast<long>(cone.ambient_dim) + 1 - cone.degree_sum());
  in.weight_abs = weight < 0 ? -weight : weight;
  in.compactly_supported = compact;
  return in;
}

}  // namespace conedef
