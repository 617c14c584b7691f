#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "whitekit/error.hpp"
#include "whitekit/matrix.hpp"
#include "whitekit/probes.hpp"

namespace whitekit {

// FEM1 layout, all little-endian:
//   "FEM1" | u8 version (1) | u32 n | u32 f | u8 has_labels
//   | n*f f32 row-major | n u32 labels (if has_labels)
inline constexpr std::array<char, 4> kFem1Magic = {'F', 'E', 'M', '1'};
inline constexpr std::uint8_t kFem1Version = 1;
inline constexpr std::size_t kFem1HeaderSize = 14;

enum class FileFormat { Fem1, Csv };

struct EmbeddingData {
  Matrix features;
  std::optional<std::vector<Label>> labels;
  std::vector<std::string> column_names;  // CSV header, if one was present
  FileFormat format = FileFormat::Fem1;

  LabeledEmbeddings labeled() const {
    if (!labels) throw Error(ErrorKind::MalformedFile, "embedding file has no labels");
    return LabeledEmbeddings(features, *labels);
  }
};

namespace detail {

inline void malformed(const std::string& what) { throw Error(ErrorKind::MalformedFile, what); }

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

/// Shortest decimal string that parses back to the same float.
inline std::string format_float(float v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<float> parse_float(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return v;
}

inline std::optional<Label> parse_label(std::string_view token) {
  Label v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) return std::nullopt;
  return v;
}

inline float to_storage(double v) {
  const float f = static_cast<float>(v);
  if (!std::isfinite(f)) malformed("value " + std::to_string(v) + " overflows 32-bit storage");
  return f;
}

}  // namespace detail

inline std::string encode_fem1(const Matrix& x, const std::optional<std::vector<Label>>& labels) {
  if (labels && labels->size() != x.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "label count does not match row count");
  }
  std::string out;
  out.reserve(kFem1HeaderSize + 4 * x.size() + (labels ? 4 * x.rows() : 0));
  out.append(kFem1Magic.data(), kFem1Magic.size());
  out.push_back(static_cast<char>(kFem1Version));
  detail::put_u32(out, static_cast<std::uint32_t>(x.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(x.cols()));
  out.push_back(labels ? 1 : 0);
  for (double v : x.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(detail::to_storage(v)));
  if (labels) {
    for (Label y : *labels) detail::put_u32(out, y);
  }
  return out;
}

inline bool looks_like_fem1(std::string_view bytes) {
  return bytes.size() >= kFem1Magic.size() &&
         std::memcmp(bytes.data(), kFem1Magic.data(), kFem1Magic.size()) == 0;
}

inline EmbeddingData decode_fem1(std::string_view bytes) {
  if (bytes.size() < kFem1HeaderSize) detail::malformed("FEM1 header is truncated");
  if (!looks_like_fem1(bytes)) detail::malformed("bad FEM1 magic");
  if (static_cast<std::uint8_t>(bytes[4]) != kFem1Version) {
    detail::malformed("unsupported FEM1 version " +
                      std::to_string(static_cast<unsigned>(static_cast<std::uint8_t>(bytes[4]))));
  }
  const std::uint64_t n = detail::get_u32(bytes, 5);
  const std::uint64_t f = detail::get_u32(bytes, 9);
  const auto has_labels = static_cast<std::uint8_t>(bytes[13]);
  if (has_labels > 1) detail::malformed("has_labels byte must be 0 or 1");
  if (n == 0 || f == 0) detail::malformed("FEM1 declares an empty matrix");
  const std::uint64_t expected = kFem1HeaderSize + 4 * n * f + (has_labels ? 4 * n : 0);
  if (bytes.size() != expected) {
    detail::malformed("FEM1 size " + std::to_string(bytes.size()) + " does not match declared " +
                      std::to_string(n) + "x" + std::to_string(f) + " (expected " +
                      std::to_string(expected) + " bytes)");
  }

  std::vector<double> values(n * f);
  std::size_t offset = kFem1HeaderSize;
  for (auto& v : values) {
    v = std::bit_cast<float>(detail::get_u32(bytes, offset));
    offset += 4;
  }
  std::optional<std::vector<Label>> labels;
  if (has_labels) {
    labels.emplace(n);
    for (auto& y : *labels) {
      y = detail::get_u32(bytes, offset);
      offset += 4;
    }
  }
  try {
    return {Matrix(n, f, std::move(values)), std::move(labels), {}, FileFormat::Fem1};
  } catch (const Error& e) {
    detail::malformed(e.what());
  }
  return {Matrix(1, 1), {}, {}, FileFormat::Fem1};  // unreachable
}

/**
 * CSV: one row per sample, comma separated. A first line whose first token
 * is not a number is taken as a header. With labels_inline the last column
 * holds integer class ids. Values are read at 32-bit precision.
 */
inline EmbeddingData parse_csv(std::string_view text, bool labels_inline) {
  std::vector<std::string> header;
  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first_content_line = true;

  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;

    auto tokens = detail::split_commas(line);
    if (first_content_line) {
      first_content_line = false;
      if (!detail::parse_float(tokens[0])) {
        for (auto t : tokens) header.emplace_back(t);
        continue;
      }
    }
    if (cols == 0) {
      cols = tokens.size();
    } else if (tokens.size() != cols) {
      detail::malformed("line " + std::to_string(line_no) + " has " +
                        std::to_string(tokens.size()) + " fields, expected " +
                        std::to_string(cols));
    }
    const std::size_t feature_count = labels_inline ? cols - 1 : cols;
    if (feature_count == 0) detail::malformed("no feature columns besides the label column");
    for (std::size_t j = 0; j < feature_count; ++j) {
      auto v = detail::parse_float(tokens[j]);
      if (!v || !std::isfinite(*v)) {
        detail::malformed("line " + std::to_string(line_no) + ", field " + std::to_string(j + 1) +
                          ": '" + std::string(tokens[j]) + "' is not a finite number");
      }
      values.push_back(*v);
    }
    if (labels_inline) {
      auto y = detail::parse_label(tokens.back());
      if (!y) {
        detail::malformed("line " + std::to_string(line_no) + ": label '" +
                          std::string(tokens.back()) + "' is not a non-negative integer");
      }
      labels.push_back(*y);
    }
    ++rows;
  }
  if (rows == 0) detail::malformed("CSV contains no data rows");
  const std::size_t f = labels_inline ? cols - 1 : cols;
  if (!header.empty() && header.size() != cols) {
    detail::malformed("header has " + std::to_string(header.size()) + " fields, rows have " +
                      std::to_string(cols));
  }
  if (labels_inline && !header.empty()) header.pop_back();

  EmbeddingData out{Matrix(rows, f, std::move(values)), std::nullopt, std::move(header),
                    FileFormat::Csv};
  if (labels_inline) out.labels = std::move(labels);
  return out;
}

inline std::string encode_csv(const Matrix& x, const std::optional<std::vector<Label>>& labels,
                              const std::vector<std::string>& column_names = {}) {
  std::string out;
  if (!column_names.empty()) {
    for (std::size_t j = 0; j < column_names.size(); ++j) {
      if (j) out += ',';
      out += column_names[j];
    }
    if (labels) out += ",label";
    out += '\n';
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += detail::format_float(detail::to_storage(row[j]));
    }
    if (labels) {
      out += ',';
      out += std::to_string((*labels)[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::malformed("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// FEM1 when the file starts with the magic bytes, CSV otherwise.
inline EmbeddingData decode_embeddings(std::string_view bytes, bool labels_inline) {
  if (bytes.empty()) detail::malformed("file is empty");
  if (looks_like_fem1(bytes)) return decode_fem1(bytes);
  return parse_csv(bytes, labels_inline);
}

inline EmbeddingData load_embeddings(const std::filesystem::path& path, bool labels_inline = false) {
  try {
    return decode_embeddings(read_file(path), labels_inline);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MalformedFile) throw Error(ErrorKind::MalformedFile, path.string() + ": " + std::string(e.what()));
    throw;
  }
}

inline std::string encode_embeddings(const EmbeddingData& data, FileFormat format) {
  return format == FileFormat::Fem1 ? encode_fem1(data.features, data.labels)
                                    : encode_csv(data.features, data.labels, data.column_names);
}

/// One non-negative integer per non-empty line.
inline std::vector<Label> read_label_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<Label> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto y = detail::parse_label(t);
    if (!y) detail::malformed(path.string() + ":" + std::to_string(line_no) + ": bad label '" + std::string(t) + "'");
    labels.push_back(*y);
  }
  return labels;
}

/// Writes to a sibling temporary file and renames it over the target, so a
/// failed write never leaves a partial file at `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) detail::malformed("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      detail::malformed("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    detail::malformed("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace whitekit
