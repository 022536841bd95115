#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "conedef/rational.hpp"

namespace conedef {

template <class F>
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, field_traits<F>::zero()) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  F& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const F& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<F> row(std::size_t r) const {
    return std::vector<F>(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                          data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  std::vector<F> apply(const std::vector<F>& v) const {
    std::vector<F> out(rows_, field_traits<F>::zero());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (!field_traits<F>::is_zero((*this)(r, c)) && !field_traits<F>::is_zero(v[c])) out[r] += (*this)(r, c) * v[c];
    return out;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<F> data_;
};

// Reduced row echelon form; nonzero rows come first, pivots[i] is the pivot column of row i.
template <class F>
struct Echelon {
  Matrix<F> reduced;
  std::vector<std::size_t> pivots;
  std::size_t rank() const { return pivots.size(); }

  // Subtract pivot rows so that v vanishes on every pivot column.
  void reduce(std::vector<F>& v) const {
    for (std::size_t i = 0; i < pivots.size(); ++i) {
      F c = v[pivots[i]];
      if (field_traits<F>::is_zero(c)) continue;
      for (std::size_t j = 0; j < reduced.cols(); ++j)
        if (!field_traits<F>::is_zero(reduced(i, j))) v[j] -= c * reduced(i, j);
    }
  }

  std::vector<std::size_t> free_columns() const {
    std::vector<bool> is_pivot(reduced.cols(), false);
    for (auto p : pivots) is_pivot[p] = true;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < reduced.cols(); ++j)
      if (!is_pivot[j]) out.push_back(j);
    return out;
  }
};

template <class F>
Echelon<F> rref(Matrix<F> m) {
  using T = field_traits<F>;
  Echelon<F> e;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && T::is_zero(m(p, c))) ++p;
    if (p == m.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    F inv = T::inverse(m(r, c));
    for (std::size_t j = c; j < m.cols(); ++j)
      if (!T::is_zero(m(r, j))) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || T::is_zero(m(i, c))) continue;
      F f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j)
        if (!T::is_zero(m(r, j))) m(i, j) -= f * m(r, j);
    }
    e.pivots.push_back(c);
    ++r;
  }
  e.reduced = std::move(m);
  return e;
}

template <class F>
std::size_t rank(const Matrix<F>& m) {
  return rref(m).rank();
}

// Basis of {x : m x = 0}.
template <class F>
std::vector<std::vector<F>> nullspace(const Matrix<F>& m) {
  using T = field_traits<F>;
  Echelon<F> e = rref(m);
  std::vector<std::vector<F>> basis;
  for (std::size_t fc : e.free_columns()) {
    std::vector<F> v(m.cols(), T::zero());
    v[fc] = T::one();
    for (std::size_t i = 0; i < e.pivots.size(); ++i) v[e.pivots[i]] = -e.reduced(i, fc);
    basis.push_back(std::move(v));
  }
  return basis;
}

// One solution of m x = b, or nullopt when inconsistent.
template <class F>
std::optional<std::vector<F>> solve(const Matrix<F>& m, const std::vector<F>& b) {
  using T = field_traits<F>;
  Matrix<F> aug(m.rows(), m.cols() + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) aug(r, c) = m(r, c);
    aug(r, m.cols()) = b[r];
  }
  Echelon<F> e = rref(aug);
  std::vector<F> x(m.cols(), T::zero());
  for (std::size_t i = 0; i < e.pivots.size(); ++i) {
    if (e.pivots[i] == m.cols()) return std::nullopt;
    x[e.pivots[i]] = e.reduced(i, m.cols());
  }
  return x;
}

}  // namespace conedef
