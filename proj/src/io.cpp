#include "mkmc/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace mkmc::io {

namespace {

constexpr char kMagic[4] = {'M', 'K', 'M', 'C'};
constexpr unsigned char kVersion = 0x01;
constexpr std::size_t kHeaderSize = 13;  // magic + version + rows + cols

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw IoError(std::string(what) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw IoError(std::string(what) + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string encode_binary(const Matrix& m) {
  std::string out(kMagic, sizeof(kMagic));
  out.reserve(kHeaderSize + 8 * static_cast<std::size_t>(m.size()));
  out.push_back(static_cast<char>(kVersion));
  put_le(out, static_cast<std::uint32_t>(m.rows()), 4);
  put_le(out, static_cast<std::uint32_t>(m.cols()), 4);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) put_le(out, std::bit_cast<std::uint64_t>(m(i, j)), 8);
  }
  return out;
}

Matrix decode_binary(const std::string& bytes) {
  if (bytes.size() < kHeaderSize || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw IoError("binary matrix: missing MKMC header");
  }
  if (static_cast<unsigned char>(bytes[4]) != kVersion) {
    throw IoError("binary matrix: unsupported version " +
                  std::to_string(static_cast<unsigned char>(bytes[4])));
  }
  const auto rows = static_cast<std::size_t>(get_le(bytes, 5, 4));
  const auto cols = static_cast<std::size_t>(get_le(bytes, 9, 4));
  if (bytes.size() != kHeaderSize + 8 * rows * cols) {
    throw IoError("binary matrix: payload length does not match " + std::to_string(rows) + "x" +
                  std::to_string(cols));
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t offset = kHeaderSize;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j, offset += 8) {
      m(i, j) = std::bit_cast<double>(get_le(bytes, offset, 8));
    }
  }
  return m;
}

std::string encode_csv(const Matrix& m) {
  std::string out;
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof(buf), m(i, j), std::chars_format::general, 17);
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

Matrix decode_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw IoError("csv matrix: bad number '" + std::string(field) + "' on line " +
                      std::to_string(line_no));
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("csv matrix: ragged row on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("csv matrix: no data");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

MatrixFormat detect_format(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  return bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin()) ? MatrixFormat::Binary
                                                                            : MatrixFormat::Csv;
}

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  try {
    if (bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin())) {
      return decode_binary(bytes);
    }
    return decode_csv(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format) {
  write_text(path, format == MatrixFormat::Binary ? encode_binary(m) : encode_csv(m));
}

SymmetricMatrix read_kernel(const std::filesystem::path& path) {
  const Matrix m = read_matrix(path);
  if (m.rows() != m.cols()) {
    throw DimensionError(path.string() + ": kernel matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return SymmetricMatrix(m);
}

nlohmann::json mask_to_json(const VisibilityPattern& pattern) {
  nlohmann::json views = nlohmann::json::array();
  for (const auto& hidden : pattern.hidden_sets()) {
    views.push_back({{"hidden", hidden}});
  }
  return {{"ell", pattern.ell()}, {"views", views}};
}

VisibilityPattern mask_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("mask: expected a JSON object");
  const auto ell = require<Index>(j, "ell", "mask");
  const auto views = require<nlohmann::json>(j, "views", "mask");
  if (!views.is_array()) throw IoError("mask: 'views' must be an array");
  std::vector<IndexSet> hidden;
  for (const auto& v : views) {
    if (!v.is_object()) throw IoError("mask: each view must be an object");
    auto h = require<IndexSet>(v, "hidden", "mask view");
    std::sort(h.begin(), h.end());
    hidden.push_back(std::move(h));
  }
  return VisibilityPattern(ell, std::move(hidden));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_bytes(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

VisibilityPattern read_mask(const std::filesystem::path& path) { return mask_from_json(read_json(path)); }

void write_mask(const std::filesystem::path& path, const VisibilityPattern& pattern) {
  write_text(path, mask_to_json(pattern).dump(2) + "\n");
}

nlohmann::json trace_to_json(const CompletionResult& result, Method method) {
  return {
      {"method", to_string(method)},
      {"objective", result.trace},
      {"iterations", result.iterations},
      {"converged", result.converged},
      {"dof", result.dof},
      {"rank", result.rank},
      // Timing only; not part of the numerical result.
      {"iteration_wall_ms", result.iteration_ms},
  };
}

nlohmann::json report_to_json(const RecoveryReport& report) {
  return {
      {"method", report.method},
      {"per_view_relative_error", report.per_view_relative_error},
      {"mean_relative_error", report.mean_relative_error},
      {"baseline_errors", report.baseline_errors},
      {"objective_trace", report.objective_trace},
      {"iterations", report.iterations},
  };
}

RecoveryReport report_from_json(const nlohmann::json& j) {
  RecoveryReport r;
  r.method = require<std::string>(j, "method", "report");
  r.per_view_relative_error = require<std::vector<double>>(j, "per_view_relative_error", "report");
  r.mean_relative_error = require<double>(j, "mean_relative_error", "report");
  r.baseline_errors = require<std::map<std::string, double>>(j, "baseline_errors", "report");
  r.objective_trace = require<std::vector<double>>(j, "objective_trace", "report");
  r.iterations = require<int>(j, "iterations", "report");
  return r;
}

RunConfig apply_run_config(const nlohmann::json& j, RunConfig base) {
  static const std::set<std::string> kKeys = {"method",      "rank",   "tol",  "max_iters",
                                              "reg_epsilon", "seed",   "inputs", "mask",
                                              "output_dir"};
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");
  }
  auto expect = [&](const char* key, bool ok, const char* type) {
    if (j.contains(key) && !ok) {
      throw InvalidArgument(std::string("config: '") + key + "' must be " + type);
    }
  };
  expect("method", j.contains("method") && j["method"].is_string(), "a string");
  expect("tol", j.contains("tol") && j["tol"].is_number(), "a number");
  expect("max_iters", j.contains("max_iters") && j["max_iters"].is_number_integer(), "an integer");
  expect("reg_epsilon", j.contains("reg_epsilon") && j["reg_epsilon"].is_number(), "a number");
  expect("seed", j.contains("seed") && j["seed"].is_number_unsigned(), "a non-negative integer");
  expect("mask", j.contains("mask") && j["mask"].is_string(), "a string");
  expect("output_dir", j.contains("output_dir") && j["output_dir"].is_string(), "a string");
  if (j.contains("inputs")) {
    const auto& in = j["inputs"];
    const bool ok = in.is_array() && !in.empty() &&
                    std::all_of(in.begin(), in.end(), [](const auto& p) { return p.is_string(); });
    expect("inputs", ok, "a non-empty array of paths");
  }
  if (j.contains("rank")) {
    const auto& r = j["rank"];
    const bool is_int = r.is_number_integer();
    const bool is_criterion = r.is_object() && r.size() == 1 && r.contains("criterion") &&
                              r["criterion"].is_string();
    expect("rank", is_int || is_criterion, "an integer or {\"criterion\": \"gk\"|\"kaiser\"}");
  }

  RunConfig out = std::move(base);
  CompletionConfig& c = out.completion;
  if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
  if (j.contains("rank")) {
    const auto& r = j["rank"];
    if (r.is_number_integer()) {
      c.rank = r.get<Index>();
    } else {
      c.rank = parse_rank_criterion(r["criterion"].get<std::string>());
    }
  }
  if (j.contains("tol")) c.tol = j["tol"].get<double>();
  if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<int>();
  if (j.contains("reg_epsilon")) c.reg_epsilon = j["reg_epsilon"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("inputs")) {
    out.inputs.clear();
    for (const auto& p : j["inputs"]) out.inputs.emplace_back(p.get<std::string>());
  }
  if (j.contains("mask")) out.mask = j["mask"].get<std::string>();
  if (j.contains("output_dir")) out.output_dir = j["output_dir"].get<std::string>();
  c.validate();
  return out;
}

}  // namespace mkmc::io
