#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mkmc/matrix.hpp"
#include "mkmc/views.hpp"

namespace mkmc {

enum class Method { FC, PCA, FA };

std::string to_string(Method method);
/// Accepts "fc", "pca", "fa" (case-insensitive).
Method parse_method(const std::string& name);

/// Unrestricted model matrix.
struct FullModel {
  SymmetricMatrix m;
};

/// M = W W^T + sigma2 I.
struct PcaModel {
  Matrix w;  ///< ell x q
  double sigma2;
};

/// M = W W^T + diag(psi).
struct FaModel {
  Matrix w;  ///< ell x q
  Vector psi;
};

using ModelParams = std::variant<FullModel, PcaModel, FaModel>;

/// Materializes the model matrix.
SymmetricMatrix model_matrix(const ModelParams& params);

enum class RankCriterion { GuttmanKaiser, Kaiser };

std::string to_string(RankCriterion criterion);
/// Accepts "gk" or "kaiser".
RankCriterion parse_rank_criterion(const std::string& name);

/// Either an explicit q or a rule applied to the initial average kernel.
using RankPolicy = std::variant<Index, RankCriterion>;

struct CompletionConfig {
  Method method = Method::PCA;
  RankPolicy rank = RankCriterion::GuttmanKaiser;
  double tol = 1e-8;
  int max_iters = 500;
  double reg_epsilon = 1e-3;
  std::uint64_t seed = 0;
  bool zero_baseline = true;
  bool mean_baseline = true;
  bool shared_mask = false;
  /// Worker threads for the per-view imputation step. Results do not depend on it.
  int threads = 1;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct CompletionResult {
  std::vector<SymmetricMatrix> completed;
  ModelParams model;
  /// Objective after each iteration's model update (see penalized_objective).
  std::vector<double> trace;
  /// Wall-clock milliseconds per iteration. Diagnostic only.
  std::vector<double> iteration_ms;
  int iterations = 0;
  bool converged = false;
  Index rank = 0;  ///< q for PCA/FA, ell for FC
  Index dof = 0;
};

/// Snapshot handed to an IterationObserver after each model update.
struct IterationState {
  int iteration;
  const std::vector<SymmetricMatrix>& completed;
  const ModelParams& model;
  double objective;
};

using IterationObserver = std::function<void(const IterationState&)>;

/// Entrywise mean of the kernels, accumulated in view order.
SymmetricMatrix average_kernel(std::span<const SymmetricMatrix> qs);

/// (K S + eps I) / (K + eps). Returns `s` unchanged when eps == 0.
SymmetricMatrix regularize(const SymmetricMatrix& s, std::size_t num_views, double eps);

struct Imputation {
  Matrix vh;  ///< n x h
  Matrix hh;  ///< h x h, symmetric
};

/**
 * Conditional second moments of the hidden block given the visible block.
 *
 *   Q_vh = Q_vv M_vv^{-1} M_vh
 *   Q_hh = M_hh - M_hv M_vv^{-1} M_vh + M_hv M_vv^{-1} Q_vv M_vv^{-1} M_vh
 *
 * `model_parts` is the model matrix partitioned under the view's permutation.
 * M_vv^{-1} is applied through a Cholesky solve. Throws NumericalError if
 * M_vv is not numerically positive definite.
 */
Imputation impute_view(const SymmetricMatrix& q_vv, const PartitionedView& model_parts);

/// Partition `q` by `hidden`, impute its hidden entries against `model`, and reassemble.
SymmetricMatrix complete_view(const SymmetricMatrix& q, const IndexSet& hidden,
                              const SymmetricMatrix& model);

FullModel fc_model_update(const SymmetricMatrix& s_reg);

/**
 * Closed-form maximizer of the PPCA likelihood for second-moment matrix `s_reg`:
 * sigma2 is the mean of the ell - q trailing eigenvalues and
 * W = U_q (Lambda_q - sigma2 I)^{1/2}, with negative entries of
 * Lambda_q - sigma2 I clamped to zero.
 */
PcaModel pca_model_update(const SymmetricMatrix& s_reg, Index q);

/// Intermediates of one factor-analysis EM step, exposed for verification.
struct FaEmStep {
  FaModel model;
  Matrix f;      ///< W^T diag(psi)^{-1}
  Matrix c;      ///< I + F W
  Matrix m_inv;  ///< diag(psi)^{-1} - F^T C^{-1} F
  Matrix b;      ///< W^T M^{-1}
  Matrix s_xz;   ///< S B^T
  Matrix s_zz;   ///< I - B W + B S_xz
};

/// One EM step for M = W W^T + diag(psi) from `prev`. psi is floored at 1e-10 * trace(S) / ell.
FaEmStep fa_em_step(const SymmetricMatrix& s_reg, const FaModel& prev);

inline FaModel fa_model_update(const SymmetricMatrix& s_reg, const FaModel& prev) {
  return fa_em_step(s_reg, prev).model;
}

/**
 * Expected complete-data log-likelihood of the factor model, divided by K and
 * with parameter-free constants dropped:
 *
 *   <S_xz, Psi^{-1} W> - 1/2 <S_zz, W^T Psi^{-1} W> - 1/2 <S, Psi^{-1}> - 1/2 sum log psi_i
 */
double fa_expected_loglik(const SymmetricMatrix& s, const Matrix& s_xz, const Matrix& s_zz,
                          const Matrix& w, const Vector& psi);

/// Sum over views of logdet_divergence(Q_k, M).
double objective(std::span<const SymmetricMatrix> qs, const ModelParams& params);

/**
 * objective(qs, params) + eps * logdet_divergence(I, M).
 *
 * The second term is the penalty that the (K S + eps I) / (K + eps) transform
 * implicitly adds to the model update. It is the quantity every iteration
 * decreases, and it reduces to objective() for eps == 0.
 */
double penalized_objective(std::span<const SymmetricMatrix> qs, const ModelParams& params,
                           double eps);

/// Count of eigenvalues above the spectrum mean (GK) or above one (Kaiser), clamped into [1, ell-1].
Index select_rank(const SymmetricMatrix& s, RankCriterion criterion);

/// Parameter count of a model. `q` is ignored for FC.
Index degrees_of_freedom(Method method, Index ell, Index q);

/**
 * Mutual completion by block coordinate descent.
 *
 * Hidden entries of `qs_masked` are ignored and re-initialized to zero. Each
 * iteration imputes every view against the current model, averages and
 * regularizes the completed kernels, and updates the model once. The loop
 * stops when the relative objective change drops below cfg.tol, when nothing
 * is hidden (after one iteration), or after cfg.max_iters iterations.
 *
 * Visible entries of the completed matrices are bit-identical to the input.
 */
CompletionResult run_completion(std::span<const SymmetricMatrix> qs_masked,
                                const VisibilityPattern& pattern, const CompletionConfig& cfg,
                                const IterationObserver& observer = {});

}  // namespace mkmc
