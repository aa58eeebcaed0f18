#pragma once

// Banded storage and direct solvers, generic in the scalar type.
//
// Every operator in this project is a finite-difference stencil, so all
// matrices are banded with bandwidth O(k). Both factorizations below are the
// textbook unblocked algorithms (cf. LAPACK pbtf2 / gbtf2).

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

/// Square matrix with kl sub-diagonals and ku super-diagonals, row-major in
/// the band.
template <class T>
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), width_(kl + ku + 1),
        data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(kl + ku + 1), T(0)) {}

  int size() const { return n_; }
  int lower() const { return kl_; }
  int upper() const { return ku_; }

  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  T operator()(int i, int j) const {
    return in_band(i, j) ? data_[index(i, j)] : T(0);
  }
  T& ref(int i, int j) {
    if (!in_band(i, j)) throw std::out_of_range("BandMatrix: entry outside band");
    return data_[index(i, j)];
  }
  void add(int i, int j, T v) { ref(i, j) += v; }

  int col_begin(int i) const { return std::max(0, i - kl_); }
  int col_end(int i) const { return std::min(n_, i + ku_ + 1); }

  std::vector<T> multiply(std::span<const T> x) const {
    std::vector<T> y(static_cast<std::size_t>(n_), T(0));
    for (int i = 0; i < n_; ++i) {
      T s = 0;
      for (int j = col_begin(i); j < col_end(i); ++j) s += data_[index(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

  BandMatrix scaled(T s) const {
    BandMatrix out = *this;
    for (auto& v : out.data_) v *= s;
    return out;
  }

  /// this + other, widening the band if needed.
  BandMatrix plus(const BandMatrix& other) const {
    BandMatrix out(n_, std::max(kl_, other.kl_), std::max(ku_, other.ku_));
    for (int i = 0; i < n_; ++i) {
      for (int j = col_begin(i); j < col_end(i); ++j) out.add(i, j, (*this)(i, j));
      for (int j = other.col_begin(i); j < other.col_end(i); ++j) out.add(i, j, other(i, j));
    }
    return out;
  }

  /// Principal submatrix on an increasing index list. Bandwidth is preserved
  /// (in compressed indices it can only shrink).
  BandMatrix principal(std::span<const int> idx) const {
    const int m = static_cast<int>(idx.size());
    BandMatrix out(m, kl_, ku_);
    for (int a = 0; a < m; ++a) {
      for (int b = std::max(0, a - kl_); b < std::min(m, a + ku_ + 1); ++b) {
        if (in_band(idx[a], idx[b])) out.ref(a, b) = (*this)(idx[a], idx[b]);
      }
    }
    return out;
  }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(j - i + kl_);
  }

  int n_ = 0, kl_ = 0, ku_ = 0, width_ = 1;
  std::vector<T> data_;
};

/// Rectangular operator stored as contiguous coefficient runs per row.
template <class T>
class RowOperator {
 public:
  struct Row {
    int first = 0;
    std::vector<T> coeffs;
  };

  RowOperator() = default;
  explicit RowOperator(int cols) : cols_(cols) {}

  void push_row(int first, std::vector<T> coeffs) { rows_.push_back({first, std::move(coeffs)}); }

  int rows() const { return static_cast<int>(rows_.size()); }
  int cols() const { return cols_; }
  const Row& row(int r) const { return rows_[static_cast<std::size_t>(r)]; }

  std::vector<T> apply(std::span<const T> x) const {
    std::vector<T> y(rows_.size(), T(0));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& row = rows_[r];
      T s = 0;
      for (std::size_t j = 0; j < row.coeffs.size(); ++j) s += row.coeffs[j] * x[row.first + static_cast<int>(j)];
      y[r] = s;
    }
    return y;
  }

  std::vector<T> apply_transpose(std::span<const T> y) const {
    std::vector<T> x(static_cast<std::size_t>(cols_), T(0));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& row = rows_[r];
      for (std::size_t j = 0; j < row.coeffs.size(); ++j) x[row.first + static_cast<int>(j)] += row.coeffs[j] * y[r];
    }
    return x;
  }

  /// Gram matrix D^T diag(w) D, assembled symmetrically.
  BandMatrix<T> gram(std::span<const T> weights, int half_band) const {
    BandMatrix<T> k(cols_, half_band, half_band);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& row = rows_[r];
      const int len = static_cast<int>(row.coeffs.size());
      for (int a = 0; a < len; ++a) {
        for (int b = a; b < len; ++b) {
          const T v = weights[r] * row.coeffs[a] * row.coeffs[b];
          k.add(row.first + a, row.first + b, v);
          if (b != a) k.add(row.first + b, row.first + a, v);
        }
      }
    }
    return k;
  }

 private:
  int cols_ = 0;
  std::vector<Row> rows_;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization of a symmetric positive definite band matrix.
/// Only the lower band of the input is read.
template <class T, class SqrtFn>
class BandCholesky {
 public:
  BandCholesky(const BandMatrix<T>& a, SqrtFn sqrt_fn) : n_(a.size()), b_(a.lower()) {
    l_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(b_ + 1), T(0));
    for (int j = 0; j < n_; ++j) {
      T d = a(j, j);
      for (int k = std::max(0, j - b_); k < j; ++k) d -= at(j, k) * at(j, k);
      if (!(d > T(0))) {
        throw FactorizationError("band Cholesky: non-positive pivot at row " + std::to_string(j));
      }
      const T ljj = sqrt_fn(d);
      at(j, j) = ljj;
      for (int i = j + 1; i < std::min(n_, j + b_ + 1); ++i) {
        T s = a(i, j);
        for (int k = std::max(0, i - b_); k < j; ++k) s -= at(i, k) * at(j, k);
        at(i, j) = s / ljj;
      }
    }
  }

  std::vector<T> solve(std::span<const T> rhs) const {
    std::vector<T> y(rhs.begin(), rhs.end());
    for (int i = 0; i < n_; ++i) {
      T s = y[i];
      for (int k = std::max(0, i - b_); k < i; ++k) s -= at(i, k) * y[k];
      y[i] = s / at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
      T s = y[i];
      for (int k = i + 1; k < std::min(n_, i + b_ + 1); ++k) s -= at(k, i) * y[k];
      y[i] = s / at(i, i);
    }
    return y;
  }

 private:
  T& at(int i, int j) { return l_[static_cast<std::size_t>(i) * (b_ + 1) + static_cast<std::size_t>(j - i + b_)]; }
  T at(int i, int j) const { return l_[static_cast<std::size_t>(i) * (b_ + 1) + static_cast<std::size_t>(j - i + b_)]; }

  int n_, b_;
  std::vector<T> l_;
};

/// LU factorization with partial pivoting of a general band matrix.
/// Row interchanges widen the upper band to kl + ku.
template <class T, class AbsFn>
class BandLU {
 public:
  BandLU(const BandMatrix<T>& a, AbsFn abs_fn)
      : n_(a.size()), kl_(a.lower()), ku_(a.upper()), w_(2 * a.lower() + a.upper() + 1) {
    lu_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(w_), T(0));
    piv_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
      for (int j = a.col_begin(i); j < a.col_end(i); ++j) at(i, j) = a(i, j);

    for (int j = 0; j < n_; ++j) {
      const int last_row = std::min(n_ - 1, j + kl_);
      const int last_col = std::min(n_ - 1, j + kl_ + ku_);
      int p = j;
      T best = abs_fn(at(j, j));
      for (int i = j + 1; i <= last_row; ++i) {
        const T v = abs_fn(at(i, j));
        if (v > best) { best = v; p = i; }
      }
      if (!(best > T(0))) throw FactorizationError("band LU: singular pivot at column " + std::to_string(j));
      piv_[j] = p;
      if (p != j)
        for (int c = j; c <= last_col; ++c) std::swap(at(j, c), at(p, c));
      const T pivot = at(j, j);
      for (int i = j + 1; i <= last_row; ++i) {
        const T l = at(i, j) / pivot;
        at(i, j) = l;
        if (l == T(0)) continue;
        for (int c = j + 1; c <= last_col; ++c) at(i, c) -= l * at(j, c);
      }
    }
  }

  std::vector<T> solve(std::span<const T> rhs) const {
    std::vector<T> b(rhs.begin(), rhs.end());
    for (int j = 0; j < n_; ++j) {
      if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
      for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i) b[i] -= at(i, j) * b[j];
    }
    for (int j = n_ - 1; j >= 0; --j) {
      T s = b[j];
      for (int c = j + 1; c <= std::min(n_ - 1, j + kl_ + ku_); ++c) s -= at(j, c) * b[c];
      b[j] = s / at(j, j);
    }
    return b;
  }

 private:
  T& at(int i, int c) { return lu_[static_cast<std::size_t>(i) * w_ + static_cast<std::size_t>(c - i + kl_)]; }
  T at(int i, int c) const { return lu_[static_cast<std::size_t>(i) * w_ + static_cast<std::size_t>(c - i + kl_)]; }

  int n_, kl_, ku_, w_;
  std::vector<T> lu_;
  std::vector<int> piv_;
};

}  // namespace mfg
