#include "mkmc/eval.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mkmc {

namespace {

// Standard normal draws via Box-Muller on 53-bit uniforms; both outputs of each pair are used.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = next();
    }
    return m;
  }

 private:
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

void SyntheticSpec::validate() const {
  if (ell < 2) throw InvalidArgument("synthetic: ell must be >= 2");
  if (num_views < 1) throw InvalidArgument("synthetic: need at least one view");
  if (true_rank < 1 || true_rank > ell - 1) {
    throw InvalidArgument("synthetic: true_rank must lie in [1, ell - 1]");
  }
  if (!(noise_sigma2 > 0.0)) throw InvalidArgument("synthetic: noise_sigma2 must be > 0");
  if (!(per_view_jitter >= 0.0)) throw InvalidArgument("synthetic: per_view_jitter must be >= 0");
}

std::vector<SymmetricMatrix> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  NormalStream normal(spec.seed);
  const Matrix w = normal.matrix(spec.ell, spec.true_rank);
  Matrix base = w * w.transpose();
  base.diagonal().array() += spec.noise_sigma2;

  std::vector<SymmetricMatrix> views;
  views.reserve(spec.num_views);
  for (std::size_t k = 0; k < spec.num_views; ++k) {
    if (spec.per_view_jitter > 0.0) {
      const Matrix a = normal.matrix(spec.ell, spec.ell);
      const double scale = spec.per_view_jitter / static_cast<double>(spec.ell);
      views.emplace_back(base + scale * (a * a.transpose()));
    } else {
      views.emplace_back(base);
    }
  }
  return views;
}

double hidden_block_error(const SymmetricMatrix& truth, const SymmetricMatrix& completed,
                          const IndexSet& hidden) {
  if (truth.dim() != completed.dim()) {
    throw DimensionError("hidden_block_error: matrices differ in dimension");
  }
  if (hidden.empty()) return 0.0;
  const Index ell = truth.dim();
  std::vector<bool> is_hidden(static_cast<std::size_t>(ell), false);
  for (Index h : hidden) {
    if (h < 0 || h >= ell) throw DimensionError("hidden_block_error: index out of range");
    is_hidden[static_cast<std::size_t>(h)] = true;
  }
  double num = 0.0;
  double den = 0.0;
  for (Index j = 0; j < ell; ++j) {
    for (Index i = 0; i < ell; ++i) {
      if (!is_hidden[static_cast<std::size_t>(i)] && !is_hidden[static_cast<std::size_t>(j)]) {
        continue;
      }
      const double diff = truth(i, j) - completed(i, j);
      num += diff * diff;
      den += truth(i, j) * truth(i, j);
    }
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num) / std::sqrt(den);
}

std::vector<SymmetricMatrix> mask_views(std::span<const SymmetricMatrix> truth,
                                        const VisibilityPattern& pattern, Fill fill) {
  if (truth.size() != pattern.num_views()) {
    throw DimensionError("mask_views: kernel count does not match the mask");
  }
  std::vector<SymmetricMatrix> out;
  out.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k].dim() != pattern.ell()) throw DimensionError("mask_views: dimension mismatch");
    out.push_back(apply_mask(truth[k], pattern.hidden(k), fill));
  }
  return out;
}

namespace {

double mean_error(std::span<const SymmetricMatrix> truth, std::span<const SymmetricMatrix> est,
                  const VisibilityPattern& pattern, std::vector<double>* per_view) {
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = hidden_block_error(truth[k], est[k], pattern.hidden(k));
    if (per_view != nullptr) per_view->push_back(e);
    sum += e;
  }
  return sum / static_cast<double>(truth.size());
}

}  // namespace

RecoveryReport evaluate_recovery(std::span<const SymmetricMatrix> truth,
                                 std::span<const SymmetricMatrix> completed,
                                 const VisibilityPattern& pattern, const CompletionConfig& cfg) {
  if (truth.size() != completed.size() || truth.size() != pattern.num_views() || truth.empty()) {
    throw DimensionError("evaluate_recovery: truth, completed and mask disagree on view count");
  }
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k].dim() != pattern.ell() || completed[k].dim() != pattern.ell()) {
      throw DimensionError("evaluate_recovery: matrix dimension does not match the mask");
    }
  }
  RecoveryReport report;
  report.method = to_string(cfg.method);
  report.mean_relative_error = mean_error(truth, completed, pattern, &report.per_view_relative_error);
  if (cfg.zero_baseline) {
    const auto zero = mask_views(truth, pattern, Fill::Zero);
    report.baseline_errors["zero"] = mean_error(truth, zero, pattern, nullptr);
  }
  if (cfg.mean_baseline) {
    const auto mean = mask_views(truth, pattern, Fill::Mean);
    report.baseline_errors["mean"] = mean_error(truth, mean, pattern, nullptr);
  }
  return report;
}

std::vector<RecoveryReport> compare_methods(const SyntheticSpec& spec, double fraction,
                                            const std::vector<Method>& methods,
                                            const CompletionConfig& cfg) {
  const std::vector<SymmetricMatrix> truth = generate_synthetic(spec);
  const VisibilityPattern pattern =
      random_mask(spec.ell, spec.num_views, fraction, cfg.seed, cfg.shared_mask);
  const std::vector<SymmetricMatrix> masked = mask_views(truth, pattern, Fill::Zero);

  std::vector<RecoveryReport> reports;
  reports.reserve(methods.size());
  for (Method method : methods) {
    CompletionConfig run_cfg = cfg;
    run_cfg.method = method;
    const CompletionResult result = run_completion(masked, pattern, run_cfg);
    RecoveryReport report = evaluate_recovery(truth, result.completed, pattern, run_cfg);
    report.objective_trace = result.trace;
    report.iterations = result.iterations;
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace mkmc
