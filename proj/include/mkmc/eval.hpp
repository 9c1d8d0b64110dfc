#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mkmc/engines.hpp"
#include "mkmc/matrix.hpp"
#include "mkmc/views.hpp"

namespace mkmc {

/// Shared low-rank plus isotropic-noise ground truth with optional per-view jitter.
struct SyntheticSpec {
  Index ell = 40;
  std::size_t num_views = 4;
  Index true_rank = 3;
  double noise_sigma2 = 0.1;
  double per_view_jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * Draws W (ell x true_rank, standard normal) and returns, per view,
 * W W^T + noise_sigma2 I + (jitter / ell) A_k A_k^T with A_k an ell x ell
 * standard normal draw. All draws come from one std::mt19937_64 stream in a
 * fixed order, and normals use the Box-Muller transform, so output is
 * bit-reproducible.
 */
std::vector<SymmetricMatrix> generate_synthetic(const SyntheticSpec& spec);

/**
 * ||truth - completed|| / ||truth|| over entries whose row or column is hidden
 * (Frobenius norms). Returns 0 when nothing is hidden.
 */
double hidden_block_error(const SymmetricMatrix& truth, const SymmetricMatrix& completed,
                          const IndexSet& hidden);

struct RecoveryReport {
  std::string method;
  std::vector<double> per_view_relative_error;
  double mean_relative_error = 0.0;
  /// Baseline name ("zero", "mean") to mean relative error.
  std::map<std::string, double> baseline_errors;
  std::vector<double> objective_trace;
  int iterations = 0;

  friend bool operator==(const RecoveryReport&, const RecoveryReport&) = default;
};

/// Scores completed kernels against the truth; baselines are derived from truth and pattern.
RecoveryReport evaluate_recovery(std::span<const SymmetricMatrix> truth,
                                 std::span<const SymmetricMatrix> completed,
                                 const VisibilityPattern& pattern, const CompletionConfig& cfg);

/// Masked kernels with hidden entries set to zero, as handed to run_completion.
std::vector<SymmetricMatrix> mask_views(std::span<const SymmetricMatrix> truth,
                                        const VisibilityPattern& pattern, Fill fill);

/**
 * Generates the truth from `spec`, masks it with random_mask(ell, K, fraction, cfg.seed),
 * and runs each method with `cfg` (method overridden). Reports are returned in
 * the order of `methods`.
 */
std::vector<RecoveryReport> compare_methods(const SyntheticSpec& spec, double fraction,
                                            const std::vector<Method>& methods,
                                            const CompletionConfig& cfg);

}  // namespace mkmc
