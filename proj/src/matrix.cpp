#include "mkmc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "mkmc/errors.hpp"

namespace mkmc {

SymmetricMatrix::SymmetricMatrix(const Matrix& raw) {
  if (raw.rows() != raw.cols()) {
    std::ostringstream msg;
    msg << "symmetric matrix must be square, got " << raw.rows() << "x" << raw.cols();
    throw DimensionError(msg.str());
  }
  if (raw.rows() == 0) throw DimensionError("symmetric matrix must have dimension >= 1");
  m_ = (raw + raw.transpose()) * 0.5;
}

SymmetricMatrix SymmetricMatrix::identity(Index dim) {
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

SymmetricMatrix SymmetricMatrix::zero(Index dim) { return SymmetricMatrix(Matrix::Zero(dim, dim)); }

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& diag) {
  return SymmetricMatrix(Matrix(diag.asDiagonal()));
}

SymmetricMatrix symmetrize(const Matrix& raw) { return SymmetricMatrix(raw); }

EigenDecomposition eigh(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver did not converge (dim " << a.dim()
        << ", frobenius norm " << a.matrix().norm()
        << ", max |entry| " << a.matrix().cwiseAbs().maxCoeff() << ")";
    throw NumericalError(msg.str());
  }
  const Vector& vals = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();
  const Index n = a.dim();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return vals(i) > vals(j); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = vals(src);
    Index pivot = 0;
    vecs.col(src).cwiseAbs().maxCoeff(&pivot);
    const double sign = vecs(pivot, src) < 0.0 ? -1.0 : 1.0;
    out.eigenvectors.col(k) = sign * vecs.col(src);
  }
  return out;
}

double min_eigenvalue(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge while checking definiteness");
  }
  return solver.eigenvalues().minCoeff();
}

bool is_positive_definite(const SymmetricMatrix& a, double floor) {
  return min_eigenvalue(a) > floor;
}

double default_pd_floor(const SymmetricMatrix& a) {
  return std::max(0.0, 1e-12 * a.trace() / static_cast<double>(a.dim()));
}

double logdet(const SymmetricMatrix& a) {
  Eigen::LLT<Matrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("logdet: matrix is not positive definite");
  }
  const Matrix& l = llt.matrixLLT();
  double sum = 0.0;
  for (Index i = 0; i < a.dim(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0)) throw DomainError("logdet: matrix is not positive definite");
    sum += std::log(d);
  }
  return 2.0 * sum;
}

double inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("inner: operand shapes differ");
  }
  return a.cwiseProduct(b).sum();
}

double logdet_divergence(const SymmetricMatrix& q, const SymmetricMatrix& m) {
  if (q.dim() != m.dim()) {
    std::ostringstream msg;
    msg << "logdet_divergence: dimension mismatch " << q.dim() << " vs " << m.dim();
    throw DimensionError(msg.str());
  }
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("logdet_divergence: model matrix is not positive definite");
  }
  double logdet_m = 0.0;
  const Matrix& l = llt.matrixLLT();
  for (Index i = 0; i < m.dim(); ++i) logdet_m += 2.0 * std::log(l(i, i));
  const double logdet_q = logdet(q);
  // <M^{-1}, Q - M> = tr(M^{-1} Q) - ell
  const double trace_term = llt.solve(q.matrix()).trace() - static_cast<double>(m.dim());
  return 0.5 * (logdet_m - logdet_q + trace_term);
}

}  // namespace mkmc
