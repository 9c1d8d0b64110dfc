#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkmc/engines.hpp"
#include "mkmc/eval.hpp"
#include "mkmc/matrix.hpp"
#include "mkmc/views.hpp"

namespace mkmc::io {

/// Raised for unreadable files and malformed content.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class MatrixFormat { Csv, Binary };

/// Binary when the file starts with the "MKMC" magic, CSV otherwise.
MatrixFormat detect_format(const std::filesystem::path& path);

/**
 * Binary layout: "MKMC", version byte 0x01, u32 LE rows, u32 LE cols, then
 * rows*cols IEEE-754 doubles, little-endian, row-major.
 */
std::string encode_binary(const Matrix& m);
Matrix decode_binary(const std::string& bytes);

/// Headerless comma-separated rows, 17 significant digits.
std::string encode_csv(const Matrix& m);
Matrix decode_csv(const std::string& text);

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format);

/// Reads a square matrix; throws DimensionError if it is not square.
SymmetricMatrix read_kernel(const std::filesystem::path& path);

/// {"ell": int, "views": [{"hidden": [int, ...]}, ...]}
nlohmann::json mask_to_json(const VisibilityPattern& pattern);
VisibilityPattern mask_from_json(const nlohmann::json& j);
VisibilityPattern read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const VisibilityPattern& pattern);

/// {"objective": [...], "iterations", "converged", "dof", "rank", "method", "iteration_ms": [...]}
nlohmann::json trace_to_json(const CompletionResult& result, Method method);

nlohmann::json report_to_json(const RecoveryReport& report);
RecoveryReport report_from_json(const nlohmann::json& j);

/// Run configuration as stored in a --config file.
struct RunConfig {
  CompletionConfig completion;
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path mask;
  std::filesystem::path output_dir;
};

/**
 * Validates and applies a config object on top of `base`. Unknown keys and
 * ill-typed values raise InvalidArgument before anything is changed.
 */
RunConfig apply_run_config(const nlohmann::json& j, RunConfig base);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_bytes(const std::filesystem::path& path);

}  // namespace mkmc::io
