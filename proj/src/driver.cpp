#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "mkmc/engines.hpp"

namespace mkmc {

namespace {

template <typename E>
[[noreturn]] void rethrow_annotated(const E& e, int iteration, std::size_t view) {
  std::ostringstream msg;
  msg << "iteration " << iteration << ", view " << view << ": " << e.what();
  throw E(msg.str());
}

// Imputes every view against `model`. Views are independent; with more than
// one thread they are spread round-robin and the first failing view (by index)
// is reported, so behaviour matches the sequential loop.
void impute_all(std::vector<SymmetricMatrix>& completed, const VisibilityPattern& pattern,
                const SymmetricMatrix& model, int threads, int iteration) {
  const std::size_t num_views = completed.size();
  std::vector<std::exception_ptr> errors(num_views);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < num_views; k += stride) {
      if (pattern.hidden(k).empty()) continue;
      try {
        completed[k] = complete_view(completed[k], pattern.hidden(k), model);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), num_views);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
  }

  for (std::size_t k = 0; k < num_views; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NumericalError& e) {
      rethrow_annotated(e, iteration, k);
    } catch (const DomainError& e) {
      rethrow_annotated(e, iteration, k);
    }
  }
}

}  // namespace

CompletionResult run_completion(std::span<const SymmetricMatrix> qs_masked,
                                const VisibilityPattern& pattern, const CompletionConfig& cfg,
                                const IterationObserver& observer) {
  cfg.validate();
  const std::size_t num_views = qs_masked.size();
  if (num_views == 0) throw InvalidArgument("run_completion: need at least one kernel");
  if (pattern.num_views() != num_views) {
    std::ostringstream msg;
    msg << "run_completion: " << num_views << " kernels but the mask describes "
        << pattern.num_views() << " views";
    throw DimensionError(msg.str());
  }
  const Index ell = pattern.ell();
  for (std::size_t k = 0; k < num_views; ++k) {
    if (qs_masked[k].dim() != ell) {
      std::ostringstream msg;
      msg << "run_completion: view " << k << " has dimension " << qs_masked[k].dim()
          << ", mask expects " << ell;
      throw DimensionError(msg.str());
    }
  }

  // Zero imputation of the hidden entries; visible blocks must be PD.
  std::vector<SymmetricMatrix> completed;
  completed.reserve(num_views);
  for (std::size_t k = 0; k < num_views; ++k) {
    const PartitionedView parts = partition(qs_masked[k], pattern.hidden(k));
    if (!is_positive_definite(parts.vv, default_pd_floor(parts.vv))) {
      std::ostringstream msg;
      msg << "view " << k << ": visible block is not positive definite";
      throw VisibleBlockNotPositiveDefinite(msg.str(), k);
    }
    completed.push_back(apply_mask(qs_masked[k], pattern.hidden(k), Fill::Zero));
  }

  const double eps = cfg.reg_epsilon;
  const SymmetricMatrix s0 = regularize(average_kernel(completed), num_views, eps);

  CompletionResult result{.completed = {}, .model = FullModel{s0}, .trace = {}, .iteration_ms = {}};
  if (cfg.method == Method::FC) {
    result.rank = ell;
  } else if (const Index* q = std::get_if<Index>(&cfg.rank)) {
    result.rank = *q;
  } else {
    result.rank = select_rank(s0, std::get<RankCriterion>(cfg.rank));
  }
  result.dof = degrees_of_freedom(cfg.method, ell, result.rank);

  // Starting parameters for the first factor-analysis EM step.
  FaModel fa_params;
  if (cfg.method == Method::FA) {
    PcaModel init = pca_model_update(s0, result.rank);
    fa_params = FaModel{std::move(init.w), Vector::Constant(ell, init.sigma2)};
  }

  SymmetricMatrix model = s0;
  double previous = 0.0;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const auto start = std::chrono::steady_clock::now();

    impute_all(completed, pattern, model, cfg.threads, t);
    const SymmetricMatrix s = regularize(average_kernel(completed), num_views, eps);

    try {
      switch (cfg.method) {
        case Method::FC: result.model = fc_model_update(s); break;
        case Method::PCA: result.model = pca_model_update(s, result.rank); break;
        case Method::FA:
          fa_params = fa_model_update(s, fa_params);
          result.model = fa_params;
          break;
      }
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(t) + ", model update: " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("iteration " + std::to_string(t) + ", model update: " + e.what());
    }
    model = model_matrix(result.model);
    const double current = penalized_objective(completed, result.model, eps);

    const auto stop = std::chrono::steady_clock::now();
    result.trace.push_back(current);
    result.iteration_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    result.iterations = t;
    if (observer) observer(IterationState{t, completed, result.model, current});

    if (!pattern.any_hidden()) {
      result.converged = true;
      break;
    }
    if (t > 1 && std::abs(current - previous) / std::max(1.0, std::abs(previous)) < cfg.tol) {
      result.converged = true;
      break;
    }
    previous = current;
  }

  result.completed = std::move(completed);
  return result;
}

}  // namespace mkmc
