#include "mkmc/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "mkmc/engines.hpp"
#include "mkmc/eval.hpp"
#include "mkmc/io.hpp"

namespace mkmc::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("mkmc", std::make_shared<spdlog::sinks::stderr_sink_st>());
    l->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("MKMC_LOG"); env != nullptr && *env != '\0') {
      level = spdlog::level::from_str(env);
    }
    l->set_level(level);
    return l;
  }();
  return log;
}

std::string extension_for(io::MatrixFormat format) {
  return format == io::MatrixFormat::Binary ? ".bin" : ".csv";
}

std::vector<SymmetricMatrix> read_kernels(const std::vector<fs::path>& paths) {
  if (paths.empty()) throw InvalidArgument("no input matrices given");
  std::vector<SymmetricMatrix> kernels;
  kernels.reserve(paths.size());
  for (const auto& p : paths) {
    kernels.push_back(io::read_kernel(p));
    if (kernels.back().dim() != kernels.front().dim()) {
      throw DimensionError(p.string() + ": dimension " + std::to_string(kernels.back().dim()) +
                           " differs from " + std::to_string(kernels.front().dim()));
    }
    logger()->debug("read {} ({}x{})", p.string(), kernels.back().dim(), kernels.back().dim());
  }
  return kernels;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io::IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

struct MaskArgs {
  std::vector<fs::path> inputs;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::string fill = "zero";
  bool shared = false;
  fs::path out_dir = ".";
};

int cmd_mask(const MaskArgs& a) {
  const auto kernels = read_kernels(a.inputs);
  const Fill fill = a.fill == "mean" ? Fill::Mean : Fill::Zero;
  const VisibilityPattern pattern =
      random_mask(kernels.front().dim(), kernels.size(), a.fraction, a.seed, a.shared);
  const auto masked = mask_views(kernels, pattern, fill);

  ensure_dir(a.out_dir);
  io::write_mask(a.out_dir / "mask.json", pattern);
  for (std::size_t k = 0; k < masked.size(); ++k) {
    const io::MatrixFormat format = io::detect_format(a.inputs[k]);
    const fs::path out = a.out_dir / ("masked_" + std::to_string(k) + extension_for(format));
    io::write_matrix(out, masked[k].matrix(), format);
    logger()->info("view {}: {} hidden, wrote {}", k, pattern.hidden(k).size(), out.string());
  }
  std::cout << "mask: " << pattern.ell() << " objects, " << pattern.num_views() << " views, "
            << pattern.hidden(0).size() << " hidden per view\n";
  return kOk;
}

struct CompleteArgs {
  io::RunConfig run{.completion = {}, .inputs = {}, .mask = {}, .output_dir = "."};
  std::string method = "pca";
  Index rank = 0;
  std::string rank_criterion;
  fs::path config;
  int threads = 1;
};

int cmd_complete(CompleteArgs a) {
  a.run.completion.method = parse_method(a.method);
  if (a.rank > 0) {
    a.run.completion.rank = a.rank;
  } else if (!a.rank_criterion.empty()) {
    a.run.completion.rank = parse_rank_criterion(a.rank_criterion);
  }
  a.run.completion.threads = a.threads;
  if (!a.config.empty()) {
    a.run = io::apply_run_config(io::read_json(a.config), a.run);
  }
  a.run.completion.validate();
  if (a.run.mask.empty()) throw InvalidArgument("complete: --mask is required");

  const auto kernels = read_kernels(a.run.inputs);
  const VisibilityPattern pattern = io::read_mask(a.run.mask);
  const CompletionConfig& cfg = a.run.completion;

  const CompletionResult result = run_completion(kernels, pattern, cfg, [](const IterationState& s) {
    logger()->debug("iteration {}: objective {:.17g}", s.iteration, s.objective);
  });

  ensure_dir(a.run.output_dir);
  for (std::size_t k = 0; k < result.completed.size(); ++k) {
    const io::MatrixFormat format = io::detect_format(a.run.inputs[k]);
    const fs::path out = a.run.output_dir / ("completed_" + std::to_string(k) + extension_for(format));
    io::write_matrix(out, result.completed[k].matrix(), format);
  }
  io::write_text(a.run.output_dir / "trace.json", io::trace_to_json(result, cfg.method).dump(2) + "\n");

  std::cout << "method:     " << to_string(cfg.method) << "\n"
            << "rank:       " << result.rank << "\n"
            << "dof:        " << result.dof << "\n"
            << "iterations: " << result.iterations << "\n"
            << "converged:  " << (result.converged ? "yes" : "no") << "\n";
  if (!result.trace.empty()) {
    std::cout << "objective:  " << result.trace.back() << "\n";
  }
  if (!result.converged) logger()->warn("stopped at max_iters = {} before converging", cfg.max_iters);
  return kOk;
}

struct EvaluateArgs {
  std::vector<fs::path> truth;
  std::vector<fs::path> completed;
  fs::path mask;
  fs::path trace;
  std::string method;
  fs::path out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto truth = read_kernels(a.truth);
  const auto completed = read_kernels(a.completed);
  if (truth.size() != completed.size()) {
    throw DimensionError("evaluate: " + std::to_string(truth.size()) + " truth matrices but " +
                         std::to_string(completed.size()) + " completed matrices");
  }
  const VisibilityPattern pattern = io::read_mask(a.mask);

  CompletionConfig cfg;
  nlohmann::json trace;
  if (!a.trace.empty()) {
    trace = io::read_json(a.trace);
    if (trace.contains("method") && trace["method"].is_string()) {
      cfg.method = parse_method(trace["method"].get<std::string>());
    }
  }
  if (!a.method.empty()) cfg.method = parse_method(a.method);

  RecoveryReport report = evaluate_recovery(truth, completed, pattern, cfg);
  if (!trace.is_null()) {
    try {
      report.objective_trace = trace.at("objective").get<std::vector<double>>();
      report.iterations = trace.at("iterations").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw io::IoError(a.trace.string() + ": " + e.what());
    }
  }

  const std::string text = io::report_to_json(report).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
    return kOk;
  }
  io::write_text(a.out, text);
  std::cout << report.method << ": mean relative error " << report.mean_relative_error << "\n";
  for (const auto& [name, err] : report.baseline_errors) {
    std::cout << name << " baseline: mean relative error " << err << "\n";
  }
  return kOk;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::string format = "csv";
  fs::path out_dir = ".";
};

int cmd_synth(const SynthArgs& a) {
  const auto views = generate_synthetic(a.spec);
  const io::MatrixFormat format = a.format == "bin" ? io::MatrixFormat::Binary : io::MatrixFormat::Csv;
  ensure_dir(a.out_dir);
  for (std::size_t k = 0; k < views.size(); ++k) {
    io::write_matrix(a.out_dir / ("truth_" + std::to_string(k) + extension_for(format)),
                     views[k].matrix(), format);
  }
  std::cout << "synth: wrote " << views.size() << " kernels of size " << a.spec.ell << "\n";
  return kOk;
}

int report_error(const char* kind, const std::exception& e, int code) {
  logger()->error("{}: {}", kind, e.what());
  std::cerr << "mkmc: " << e.what() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Mutual completion of incomplete kernel matrices under the LogDet divergence", "mkmc"};
  app.require_subcommand(1);

  MaskArgs mask_args;
  auto* mask = app.add_subcommand("mask", "Hide random rows/columns per view and write masked matrices");
  mask->add_option("--inputs", mask_args.inputs, "Kernel matrix files (CSV or MKMC binary)")->required();
  mask->add_option("--fraction", mask_args.fraction, "Fraction of objects hidden per view")
      ->check(CLI::Range(0.0, 1.0));
  mask->add_option("--seed", mask_args.seed, "PRNG seed");
  mask->add_option("--fill", mask_args.fill, "Value written into hidden entries")
      ->check(CLI::IsMember({"zero", "mean"}));
  mask->add_flag("--shared", mask_args.shared, "Hide the same objects in every view");
  mask->add_option("--out-dir", mask_args.out_dir, "Output directory");

  CompleteArgs complete_args;
  auto* complete = app.add_subcommand("complete", "Complete masked kernel matrices");
  complete->add_option("--inputs", complete_args.run.inputs, "Masked kernel matrix files");
  complete->add_option("--mask", complete_args.run.mask, "Mask JSON file");
  complete->add_option("--output-dir", complete_args.run.output_dir, "Output directory");
  complete->add_option("--method", complete_args.method, "fc, pca or fa")
      ->check(CLI::IsMember({"fc", "pca", "fa"}, CLI::ignore_case));
  auto* rank_opt = complete->add_option("--rank", complete_args.rank, "Explicit rank q");
  complete->add_option("--rank-criterion", complete_args.rank_criterion, "gk or kaiser")
      ->check(CLI::IsMember({"gk", "kaiser"}, CLI::ignore_case))
      ->excludes(rank_opt);
  complete->add_option("--tol", complete_args.run.completion.tol, "Relative objective-change threshold");
  complete->add_option("--max-iters", complete_args.run.completion.max_iters, "Iteration limit");
  complete->add_option("--reg-epsilon", complete_args.run.completion.reg_epsilon,
                       "Regularization of the average kernel");
  complete->add_option("--seed", complete_args.run.completion.seed, "Seed (recorded, unused by completion)");
  complete->add_option("--threads", complete_args.threads, "Threads for per-view imputation")
      ->check(CLI::PositiveNumber);
  complete->add_option("--config", complete_args.config, "JSON run configuration; overrides flags");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score completed matrices against the truth");
  evaluate->add_option("--truth", eval_args.truth, "Ground-truth matrices")->required();
  evaluate->add_option("--completed", eval_args.completed, "Completed matrices")->required();
  evaluate->add_option("--mask", eval_args.mask, "Mask JSON file")->required();
  evaluate->add_option("--trace", eval_args.trace, "trace.json written by `complete`");
  evaluate->add_option("--method", eval_args.method, "Method label for the report");
  evaluate->add_option("--out", eval_args.out, "Report JSON path (stdout when omitted)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write synthetic low-rank ground-truth kernels");
  synth->add_option("--ell", synth_args.spec.ell, "Number of objects");
  synth->add_option("--views", synth_args.spec.num_views, "Number of views");
  synth->add_option("--rank", synth_args.spec.true_rank, "True rank");
  synth->add_option("--noise", synth_args.spec.noise_sigma2, "Isotropic noise variance");
  synth->add_option("--jitter", synth_args.spec.per_view_jitter, "Per-view jitter scale");
  synth->add_option("--seed", synth_args.spec.seed, "PRNG seed");
  synth->add_option("--format", synth_args.format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  synth->add_option("--out-dir", synth_args.out_dir, "Output directory");

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kIo;
  }

  try {
    if (mask->parsed()) return cmd_mask(mask_args);
    if (complete->parsed()) return cmd_complete(complete_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (synth->parsed()) return cmd_synth(synth_args);
  } catch (const VisibleBlockNotPositiveDefinite& e) {
    return report_error("not positive definite", e, kNotPositiveDefinite);
  } catch (const DimensionError& e) {
    return report_error("dimension mismatch", e, kDimension);
  } catch (const io::IoError& e) {
    return report_error("io", e, kIo);
  } catch (const InvalidArgument& e) {
    return report_error("invalid argument", e, kIo);
  } catch (const NumericalError& e) {
    return report_error("numerical failure", e, kNumerical);
  } catch (const DomainError& e) {
    return report_error("numerical failure", e, kNumerical);
  }
  return kIo;
}

}  // namespace mkmc::cli
