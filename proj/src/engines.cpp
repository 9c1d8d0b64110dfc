#include "mkmc/engines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace mkmc {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void check_rank(Index ell, Index q) {
  if (q < 1 || q > ell - 1) {
    std::ostringstream msg;
    msg << "rank q = " << q << " outside [1, " << ell - 1 << "]";
    throw InvalidArgument(msg.str());
  }
}

// Cholesky factor of a model matrix together with its log-determinant.
struct ModelFactor {
  Eigen::LLT<Matrix> llt;
  double logdet = 0.0;

  explicit ModelFactor(const SymmetricMatrix& m) : llt(m.matrix()) {
    if (llt.info() != Eigen::Success) {
      throw DomainError("model matrix is not positive definite");
    }
    const Matrix& l = llt.matrixLLT();
    for (Index i = 0; i < m.dim(); ++i) logdet += 2.0 * std::log(l(i, i));
  }

  double divergence(const SymmetricMatrix& q) const {
    const double ell = static_cast<double>(q.dim());
    return 0.5 * (logdet - mkmc::logdet(q) + llt.solve(q.matrix()).trace() - ell);
  }
};

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::FC: return "fc";
    case Method::PCA: return "pca";
    case Method::FA: return "fa";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  const std::string n = lower(name);
  if (n == "fc") return Method::FC;
  if (n == "pca") return Method::PCA;
  if (n == "fa") return Method::FA;
  throw InvalidArgument("unknown method '" + name + "' (expected fc, pca or fa)");
}

std::string to_string(RankCriterion criterion) {
  return criterion == RankCriterion::GuttmanKaiser ? "gk" : "kaiser";
}

RankCriterion parse_rank_criterion(const std::string& name) {
  const std::string n = lower(name);
  if (n == "gk") return RankCriterion::GuttmanKaiser;
  if (n == "kaiser") return RankCriterion::Kaiser;
  throw InvalidArgument("unknown rank criterion '" + name + "' (expected gk or kaiser)");
}

void CompletionConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(reg_epsilon >= 0.0)) throw InvalidArgument("reg_epsilon must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (const Index* q = std::get_if<Index>(&rank); q != nullptr && *q < 1) {
    throw InvalidArgument("rank must be >= 1");
  }
}

SymmetricMatrix model_matrix(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> SymmetricMatrix {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FullModel>) {
          return p.m;
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          Matrix m = p.w * p.w.transpose();
          m.diagonal().array() += p.sigma2;
          return SymmetricMatrix(m);
        } else {
          Matrix m = p.w * p.w.transpose();
          m.diagonal() += p.psi;
          return SymmetricMatrix(m);
        }
      },
      params);
}

SymmetricMatrix average_kernel(std::span<const SymmetricMatrix> qs) {
  if (qs.empty()) throw InvalidArgument("average_kernel: need at least one kernel");
  const Index ell = qs.front().dim();
  Matrix sum = Matrix::Zero(ell, ell);
  for (const auto& q : qs) {
    if (q.dim() != ell) throw DimensionError("average_kernel: kernels differ in dimension");
    sum += q.matrix();
  }
  return SymmetricMatrix(sum / static_cast<double>(qs.size()));
}

SymmetricMatrix regularize(const SymmetricMatrix& s, std::size_t num_views, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("regularize: eps must be >= 0");
  if (eps == 0.0) return s;
  const double k = static_cast<double>(num_views);
  Matrix out = k * s.matrix();
  out.diagonal().array() += eps;
  return SymmetricMatrix(out / (k + eps));
}

Imputation impute_view(const SymmetricMatrix& q_vv, const PartitionedView& model_parts) {
  const Index n = model_parts.num_visible();
  const Index h = model_parts.num_hidden();
  if (q_vv.dim() != n || model_parts.vh.rows() != n || model_parts.vh.cols() != h) {
    throw DimensionError("impute_view: visible block and model partition disagree");
  }
  if (h == 0) return Imputation{Matrix(n, 0), Matrix(0, 0)};

  Eigen::LLT<Matrix> llt(model_parts.vv.matrix());
  if (llt.info() != Eigen::Success) {
    throw NumericalError("impute_view: visible block of the model is not positive definite");
  }
  // x = M_vv^{-1} M_vh
  const Matrix x = llt.solve(model_parts.vh);
  Imputation out;
  out.vh = q_vv.matrix() * x;
  Matrix hh = model_parts.hh - model_parts.vh.transpose() * x + x.transpose() * out.vh;
  out.hh = (hh + hh.transpose()) * 0.5;
  return out;
}

SymmetricMatrix complete_view(const SymmetricMatrix& q, const IndexSet& hidden,
                              const SymmetricMatrix& model) {
  if (q.dim() != model.dim()) throw DimensionError("complete_view: kernel and model differ in dimension");
  if (hidden.empty()) return q;
  PartitionedView view = partition(q, hidden);
  const PartitionedView model_parts = partition(model, hidden);
  Imputation imp = impute_view(view.vv, model_parts);
  view.vh = std::move(imp.vh);
  view.hh = std::move(imp.hh);
  return unpartition(view);
}

FullModel fc_model_update(const SymmetricMatrix& s_reg) {
  if (!is_positive_definite(s_reg, 0.0)) {
    throw DomainError("fc_model_update: average kernel is not positive definite");
  }
  return FullModel{s_reg};
}

PcaModel pca_model_update(const SymmetricMatrix& s_reg, Index q) {
  const Index ell = s_reg.dim();
  check_rank(ell, q);
  const EigenDecomposition eig = eigh(s_reg);
  const double sigma2 = eig.eigenvalues.tail(ell - q).mean();
  if (!(sigma2 > 0.0)) {
    throw DomainError("pca_model_update: trailing eigenvalues are not positive");
  }
  const Vector scale = (eig.eigenvalues.head(q).array() - sigma2).max(0.0).sqrt();
  return PcaModel{eig.eigenvectors.leftCols(q) * scale.asDiagonal(), sigma2};
}

FaEmStep fa_em_step(const SymmetricMatrix& s_reg, const FaModel& prev) {
  const Index ell = s_reg.dim();
  const Index q = prev.w.cols();
  if (prev.w.rows() != ell || prev.psi.size() != ell) {
    throw DimensionError("fa_model_update: parameters do not match the kernel dimension");
  }
  if (!(prev.psi.array() > 0.0).all()) {
    throw DomainError("fa_model_update: noise variances must be positive");
  }
  const Matrix& s = s_reg.matrix();
  const Vector psi_inv = prev.psi.cwiseInverse();
  const Matrix eye = Matrix::Identity(q, q);

  FaEmStep step;
  step.f = prev.w.transpose() * psi_inv.asDiagonal();
  step.c = eye + step.f * prev.w;
  Eigen::LLT<Matrix> c_llt(step.c);
  if (c_llt.info() != Eigen::Success) throw NumericalError("fa_model_update: C is singular");

  // Woodbury: (W W^T + Psi)^{-1} = Psi^{-1} - F^T C^{-1} F
  step.m_inv = step.f.transpose() * c_llt.solve(step.f);
  step.m_inv *= -1.0;
  step.m_inv.diagonal() += psi_inv;
  step.b = prev.w.transpose() * step.m_inv;
  step.s_xz = s * step.b.transpose();
  step.s_zz = eye - step.b * prev.w + step.b * step.s_xz;

  const Matrix s_zz_sym = (step.s_zz + step.s_zz.transpose()) * 0.5;
  Eigen::LLT<Matrix> zz_llt(s_zz_sym);
  if (zz_llt.info() != Eigen::Success) throw NumericalError("fa_model_update: S_zz is singular");

  step.model.w = zz_llt.solve(step.s_xz.transpose()).transpose();
  const double floor = 1e-10 * s_reg.trace() / static_cast<double>(ell);
  step.model.psi.resize(ell);
  for (Index i = 0; i < ell; ++i) {
    // [S_xz S_zz^{-1} S_xz^T]_ii = sum_j W_new(i, j) S_xz(i, j)
    const double explained = step.model.w.row(i).dot(step.s_xz.row(i));
    step.model.psi(i) = std::max(s(i, i) - explained, floor);
  }
  return step;
}

double fa_expected_loglik(const SymmetricMatrix& s, const Matrix& s_xz, const Matrix& s_zz,
                          const Matrix& w, const Vector& psi) {
  const Vector psi_inv = psi.cwiseInverse();
  const Matrix scaled_w = psi_inv.asDiagonal() * w;
  return inner(s_xz, scaled_w) - 0.5 * inner(s_zz, w.transpose() * scaled_w) -
         0.5 * s.matrix().diagonal().dot(psi_inv) - 0.5 * psi.array().log().sum();
}

double objective(std::span<const SymmetricMatrix> qs, const ModelParams& params) {
  const SymmetricMatrix m = model_matrix(params);
  const ModelFactor factor(m);
  double total = 0.0;
  for (const auto& q : qs) {
    if (q.dim() != m.dim()) throw DimensionError("objective: kernel and model differ in dimension");
    total += factor.divergence(q);
  }
  return total;
}

double penalized_objective(std::span<const SymmetricMatrix> qs, const ModelParams& params,
                           double eps) {
  double total = objective(qs, params);
  if (eps > 0.0) {
    const SymmetricMatrix m = model_matrix(params);
    total += eps * logdet_divergence(SymmetricMatrix::identity(m.dim()), m);
  }
  return total;
}

Index select_rank(const SymmetricMatrix& s, RankCriterion criterion) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("select_rank: eigensolver failed");
  const Vector& lambda = solver.eigenvalues();
  const double threshold = criterion == RankCriterion::GuttmanKaiser ? lambda.mean() : 1.0;
  const auto count = static_cast<Index>((lambda.array() > threshold).count());
  return std::max<Index>(1, std::min(count, s.dim() - 1));
}

Index degrees_of_freedom(Method method, Index ell, Index q) {
  if (ell < 1) throw InvalidArgument("degrees_of_freedom: ell must be >= 1");
  switch (method) {
    case Method::FC:
      return (ell + 1) * ell / 2;
    case Method::PCA:
      check_rank(ell, q);
      return ell * q + 1 - (q - 1) * q / 2;
    case Method::FA:
      check_rank(ell, q);
      return ell * q + ell - (q - 1) * q / 2;
  }
  throw InvalidArgument("degrees_of_freedom: unknown method");
}

}  // namespace mkmc
