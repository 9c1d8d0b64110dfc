#pragma once

#include <Eigen/Dense>

#include "mkmc/errors.hpp"

namespace mkmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * Dense real symmetric matrix.
 *
 * Every construction path goes through (A + A^T) / 2, so entries(i, j) and
 * entries(j, i) are bit-identical. Symmetrizing a matrix that is already
 * symmetric is exact, which keeps block extraction and reassembly free of
 * arithmetic drift.
 */
class SymmetricMatrix {
 public:
  /// Symmetrizes `raw`. Throws DimensionError if `raw` is not square or is empty.
  explicit SymmetricMatrix(const Matrix& raw);

  static SymmetricMatrix identity(Index dim);
  static SymmetricMatrix zero(Index dim);
  static SymmetricMatrix diagonal(const Vector& diag);

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace(); }

  friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// Returns (raw + raw^T) / 2.
SymmetricMatrix symmetrize(const Matrix& raw);

/// Spectral decomposition with eigenvalues sorted non-increasing.
struct EigenDecomposition {
  Vector eigenvalues;
  /// Column j pairs with eigenvalues(j). Each column's largest-magnitude entry is positive.
  Matrix eigenvectors;
};

EigenDecomposition eigh(const SymmetricMatrix& a);

/// Smallest eigenvalue of `a`.
double min_eigenvalue(const SymmetricMatrix& a);

/// True iff the smallest eigenvalue of `a` exceeds `floor`.
bool is_positive_definite(const SymmetricMatrix& a, double floor = 0.0);

/// Module default PD floor: 1e-12 * trace(a) / dim, clamped at 0.
double default_pd_floor(const SymmetricMatrix& a);

/// Log-determinant via Cholesky. Throws DomainError if `a` is not positive definite.
double logdet(const SymmetricMatrix& a);

/// Frobenius inner product <a, b> = trace(a^T b).
double inner(const Matrix& a, const Matrix& b);

/**
 * LogDet (Stein) divergence between positive definite matrices:
 *   0.5 * (logdet M - logdet Q + <M^{-1}, Q - M>).
 *
 * Non-negative, zero iff q == m.
 */
double logdet_divergence(const SymmetricMatrix& q, const SymmetricMatrix& m);

}  // namespace mkmc
