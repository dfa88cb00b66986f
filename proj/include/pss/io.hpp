#pragma once

// On-disk formats.
//
// EMB1 (embeddings):
//   "EMB1" | one JSON line {"classes":[..],"d":D,"dtype":"f32"|"f64",
//   "labels_present":bool,"n":N,"version":1} "\n" | N x uint32 class
//   indices (only if labels_present) | N*D floats, one embedding per row.
//
// PSS1 (fitted subspace):
//   "PSS1" | one JSON line {"centered":bool,"class_balanced":bool,
//   "class_name":..,"d":D,"geometry":"sphere"|"euclidean","k":K,
//   "lambda":L,"version":1} "\n" | base point (D doubles, sphere only) |
//   basis, column-major (D*K doubles) | K eigenvalues.
//
// Everything binary is little-endian. Writers emit JSON with sorted keys
// and no whitespace, so equal inputs give byte-identical files.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pss/embedding_set.hpp"
#include "pss/errors.hpp"
#include "pss/sphere.hpp"
#include "pss/subspace.hpp"

namespace pss {

inline constexpr std::string_view kEmbeddingMagic = "EMB1";
inline constexpr std::string_view kSubspaceMagic = "PSS1";
inline constexpr int kFormatVersion = 1;

enum class DType { F32, F64 };

constexpr std::string_view to_string(DType t) noexcept { return t == DType::F32 ? "f32" : "f64"; }

using WarningSink = std::function<void(const std::string&)>;

inline void warn_to_stderr(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

/// Contents of an EMB1 file, rows kept in file order.
struct EmbeddingFile {
  std::vector<std::string> classes;
  bool labels_present = false;
  std::vector<std::uint32_t> labels;  // one per row when labels_present
  DType dtype = DType::F32;
  Matrix rows;  // d x n; column j is the j-th embedding of the file

  Eigen::Index dim() const noexcept { return rows.rows(); }
  Eigen::Index count() const noexcept { return rows.cols(); }

  /// Name of row j's class ("unlabeled" when the file carries no labels and
  /// does not declare exactly one class).
  std::string class_of(Eigen::Index j) const {
    if (labels_present) return classes.at(labels.at(static_cast<std::size_t>(j)));
    return classes.size() == 1 ? classes.front() : std::string("unlabeled");
  }

  /// Groups rows by class (class order of the header, file order within a
  /// class). Classes without rows are left out.
  LabeledEmbeddingSet to_set() const {
    if (!labels_present) {
      return LabeledEmbeddingSet({class_of(0)}, {rows});
    }
    std::vector<std::vector<Eigen::Index>> members(classes.size());
    for (std::size_t j = 0; j < labels.size(); ++j) members[labels[j]].push_back(static_cast<Eigen::Index>(j));
    std::vector<std::string> names;
    std::vector<Matrix> data;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (members[c].empty()) continue;
      Matrix x(dim(), static_cast<Eigen::Index>(members[c].size()));
      for (std::size_t i = 0; i < members[c].size(); ++i) x.col(static_cast<Eigen::Index>(i)) = rows.col(members[c][i]);
      names.push_back(classes[c]);
      data.push_back(std::move(x));
    }
    return {std::move(names), std::move(data)};
  }

  static EmbeddingFile from_set(const LabeledEmbeddingSet& set, DType dtype = DType::F64) {
    EmbeddingFile f;
    f.classes = set.classes();
    f.labels_present = true;
    f.dtype = dtype;
    f.rows = set.pooled();
    for (std::size_t c = 0; c < set.num_classes(); ++c) {
      f.labels.insert(f.labels.end(), static_cast<std::size_t>(set.data(c).cols()), static_cast<std::uint32_t>(c));
    }
    return f;
  }

  /// Unlabeled file holding the columns of `x`.
  static EmbeddingFile from_columns(const Matrix& x, DType dtype = DType::F64) {
    EmbeddingFile f;
    f.dtype = dtype;
    f.rows = x;
    return f;
  }
};

namespace detail {

template <typename U>
void put_le(std::string& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

inline void put_f64(std::string& out, double x) { put_le(out, std::bit_cast<std::uint64_t>(x)); }
inline void put_f32(std::string& out, float x) { put_le(out, std::bit_cast<std::uint32_t>(x)); }
inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }
inline double get_f32(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IOError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IOError, "failed reading '" + path.string() + "'");
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IOError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IOError, "failed writing '" + path.string() + "'");
}

/// Splits "MAGIC{json}\n<payload>" and parses the JSON line.
inline nlohmann::json parse_header(std::string_view bytes, std::string_view magic, std::size_t& payload_at) {
  if (bytes.size() < magic.size() || bytes.substr(0, magic.size()) != magic) {
    throw Error(ErrorKind::BadMagic, "expected magic '" + std::string(magic) + "'");
  }
  const auto nl = bytes.find('\n', magic.size());
  if (nl == std::string_view::npos) throw Error(ErrorKind::CorruptHeader, "header line is not terminated");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(magic.size(), nl - magic.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptHeader, std::string("header is not valid JSON: ") + e.what());
  }
  if (!meta.is_object()) throw Error(ErrorKind::CorruptHeader, "header is not a JSON object");
  if (!meta.contains("version") || !meta["version"].is_number_integer()) {
    throw Error(ErrorKind::CorruptHeader, "header lacks an integer version");
  }
  if (meta["version"].get<long long>() != kFormatVersion) {
    throw Error(ErrorKind::CorruptHeader, "unsupported format version " + meta["version"].dump());
  }
  payload_at = nl + 1;
  return meta;
}

template <typename T>
T require_field(const nlohmann::json& meta, const char* key) {
  if (!meta.contains(key)) throw Error(ErrorKind::CorruptHeader, std::string("header lacks '") + key + "'");
  try {
    return meta.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::CorruptHeader, std::string("header field '") + key + "' has the wrong type");
  }
}

inline long long require_count(const nlohmann::json& meta, const char* key, long long minimum) {
  if (!meta.contains(key) || !meta.at(key).is_number_integer()) {
    throw Error(ErrorKind::CorruptHeader, std::string("header field '") + key + "' must be an integer");
  }
  const auto v = meta.at(key).get<long long>();
  if (v < minimum) {
    throw Error(ErrorKind::CorruptHeader, std::string("header field '") + key + "' must be >= " + std::to_string(minimum));
  }
  return v;
}

inline void check_payload_size(std::size_t have, std::size_t want) {
  if (have < want) {
    throw Error(ErrorKind::TruncatedPayload,
                "payload has " + std::to_string(have) + " bytes, expected " + std::to_string(want));
  }
  if (have > want) throw Error(ErrorKind::CorruptPayload, "unexpected bytes after the payload");
}

}  // namespace detail

// ---------------------------------------------------------------- EMB1

inline std::string encode_embeddings(const EmbeddingFile& f) {
  if (f.dim() < 2) throw Error(ErrorKind::InvalidArgument, "EMB1 needs d >= 2");
  if (f.count() < 1) throw Error(ErrorKind::InvalidArgument, "EMB1 needs n >= 1");
  if (f.labels_present) {
    if (f.classes.empty()) throw Error(ErrorKind::InvalidArgument, "labelled EMB1 needs classes");
    if (static_cast<Eigen::Index>(f.labels.size()) != f.count()) {
      throw Error(ErrorKind::InvalidArgument, "label count differs from row count");
    }
    for (auto l : f.labels) {
      if (l >= f.classes.size()) throw Error(ErrorKind::LabelIndexOutOfRange, "label index out of range");
    }
  }
  nlohmann::json meta;
  meta["version"] = kFormatVersion;
  meta["d"] = f.dim();
  meta["n"] = f.count();
  meta["dtype"] = std::string(to_string(f.dtype));
  meta["classes"] = f.classes;
  meta["labels_present"] = f.labels_present;

  std::string out(kEmbeddingMagic);
  out += meta.dump();
  out.push_back('\n');
  const std::size_t width = f.dtype == DType::F32 ? 4 : 8;
  out.reserve(out.size() + (f.labels_present ? 4 * f.labels.size() : 0) +
              width * static_cast<std::size_t>(f.dim() * f.count()));
  if (f.labels_present) {
    for (auto l : f.labels) detail::put_le(out, l);
  }
  for (Eigen::Index j = 0; j < f.count(); ++j) {
    for (Eigen::Index i = 0; i < f.dim(); ++i) {
      if (f.dtype == DType::F32) {
        detail::put_f32(out, static_cast<float>(f.rows(i, j)));
      } else {
        detail::put_f64(out, f.rows(i, j));
      }
    }
  }
  return out;
}

/// Parses EMB1 bytes. Rows whose norm is off by more than 1e-6 are
/// re-normalized; a warning is raised when the deviation exceeds 1e-3.
inline EmbeddingFile decode_embeddings(std::string_view bytes, const WarningSink& warn = warn_to_stderr) {
  std::size_t at = 0;
  const auto meta = detail::parse_header(bytes, kEmbeddingMagic, at);
  const auto d = detail::require_count(meta, "d", 2);
  const auto n = detail::require_count(meta, "n", 1);
  const auto dtype_s = detail::require_field<std::string>(meta, "dtype");
  const auto labels_present = detail::require_field<bool>(meta, "labels_present");
  const auto classes = meta.contains("classes") ? detail::require_field<std::vector<std::string>>(meta, "classes")
                                                : std::vector<std::string>{};
  if (dtype_s != "f32" && dtype_s != "f64") throw Error(ErrorKind::CorruptHeader, "unknown dtype '" + dtype_s + "'");
  if (labels_present && classes.empty()) throw Error(ErrorKind::CorruptHeader, "labels present but no classes");

  EmbeddingFile f;
  f.classes = classes;
  f.labels_present = labels_present;
  f.dtype = dtype_s == "f32" ? DType::F32 : DType::F64;
  const std::size_t width = f.dtype == DType::F32 ? 4 : 8;
  const auto nn = static_cast<std::size_t>(n);
  const auto dd = static_cast<std::size_t>(d);
  const std::size_t want = (labels_present ? 4 * nn : 0) + width * nn * dd;
  detail::check_payload_size(bytes.size() - at, want);

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + at;
  if (labels_present) {
    f.labels.resize(nn);
    for (std::size_t j = 0; j < nn; ++j, p += 4) {
      f.labels[j] = detail::get_le<std::uint32_t>(p);
      if (f.labels[j] >= classes.size()) {
        throw Error(ErrorKind::LabelIndexOutOfRange, "row " + std::to_string(j) + " has label " +
                                                         std::to_string(f.labels[j]) + " but only " +
                                                         std::to_string(classes.size()) + " classes");
      }
    }
  }
  f.rows.resize(d, n);
  std::size_t far_off = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i, p += width) {
      f.rows(i, j) = f.dtype == DType::F32 ? detail::get_f32(p) : detail::get_f64(p);
    }
    const double norm = f.rows.col(j).norm();
    if (!std::isfinite(norm) || norm < UnitVector::kZeroNorm) {
      throw Error(ErrorKind::CorruptPayload, "row " + std::to_string(j) + " is zero or non-finite");
    }
    if (std::abs(norm - 1.0) > LabeledEmbeddingSet::kUnitTol) {
      if (std::abs(norm - 1.0) > 1e-3) ++far_off;
      f.rows.col(j) /= norm;
    }
  }
  if (far_off > 0 && warn) warn(std::to_string(far_off) + " embedding(s) were far from unit norm and were re-normalized");
  return f;
}

inline EmbeddingFile read_embeddings(const std::filesystem::path& path, const WarningSink& warn = warn_to_stderr) {
  return decode_embeddings(detail::read_file(path), warn);
}

inline void write_embeddings(const EmbeddingFile& f, const std::filesystem::path& path) {
  detail::write_file(path, encode_embeddings(f));
}

inline void write_embeddings(const LabeledEmbeddingSet& set, const std::filesystem::path& path,
                             DType dtype = DType::F64) {
  write_embeddings(EmbeddingFile::from_set(set, dtype), path);
}

/// CSV import (header "class,v0,...,v{d-1}"). Classes are numbered in order
/// of first appearance; rows are normalized like EMB1 rows.
inline EmbeddingFile read_csv_embeddings(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::CorruptHeader, "empty CSV file");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "class") {
    throw Error(ErrorKind::CorruptHeader, "CSV header must be class,v0,...,v{d-1} with d >= 2");
  }
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  EmbeddingFile f;
  f.labels_present = true;
  f.dtype = DType::F64;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<Vector> cols;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != d + 1) {
      throw Error(ErrorKind::CorruptPayload, "CSV line " + std::to_string(lineno) + " has the wrong cell count");
    }
    auto [it, inserted] = index.emplace(cells[0], static_cast<std::uint32_t>(f.classes.size()));
    if (inserted) f.classes.push_back(cells[0]);
    f.labels.push_back(it->second);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      try {
        std::size_t used = 0;
        v(i) = std::stod(cells[static_cast<std::size_t>(i + 1)], &used);
      } catch (const std::exception&) {
        throw Error(ErrorKind::CorruptPayload, "CSV line " + std::to_string(lineno) + " has a non-numeric cell");
      }
    }
    const double norm = v.norm();
    if (!(norm > UnitVector::kZeroNorm) || !std::isfinite(norm)) {
      throw Error(ErrorKind::CorruptPayload, "CSV line " + std::to_string(lineno) + " is a zero vector");
    }
    if (std::abs(norm - 1.0) > LabeledEmbeddingSet::kUnitTol) v /= norm;
    cols.push_back(std::move(v));
  }
  if (cols.empty()) throw Error(ErrorKind::CorruptPayload, "CSV file has no rows");
  f.rows.resize(d, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) f.rows.col(static_cast<Eigen::Index>(j)) = cols[j];
  return f;
}

/// Reads EMB1, or CSV when the path ends in ".csv".
inline EmbeddingFile read_embeddings_any(const std::filesystem::path& path, const WarningSink& warn = warn_to_stderr) {
  if (path.extension() == ".csv") return read_csv_embeddings(path);
  return read_embeddings(path, warn);
}

// ---------------------------------------------------------------- PSS1

inline std::string encode_subspace(const Subspace& s) {
  s.validate();
  nlohmann::json meta;
  meta["version"] = kFormatVersion;
  meta["d"] = s.dim();
  meta["k"] = s.k();
  meta["lambda"] = s.lambda;
  meta["class_name"] = s.class_name;
  meta["geometry"] = std::string(to_string(s.geometry));
  meta["centered"] = s.centered;
  meta["class_balanced"] = s.class_balanced;

  std::string out(kSubspaceMagic);
  out += meta.dump();
  out.push_back('\n');
  if (s.geometry == Geometry::Sphere) {
    for (Eigen::Index i = 0; i < s.dim(); ++i) detail::put_f64(out, s.base_point->coords()(i));
  }
  for (Eigen::Index j = 0; j < s.k(); ++j) {
    for (Eigen::Index i = 0; i < s.dim(); ++i) detail::put_f64(out, s.basis(i, j));
  }
  for (Eigen::Index j = 0; j < s.k(); ++j) detail::put_f64(out, s.eigenvalues(j));
  return out;
}

inline Subspace decode_subspace(std::string_view bytes) {
  std::size_t at = 0;
  const auto meta = detail::parse_header(bytes, kSubspaceMagic, at);
  const auto d = detail::require_count(meta, "d", 2);
  const auto k = detail::require_count(meta, "k", 1);
  if (k > d) throw Error(ErrorKind::CorruptHeader, "k exceeds d");
  Subspace s;
  s.lambda = detail::require_field<double>(meta, "lambda");
  s.class_name = detail::require_field<std::string>(meta, "class_name");
  try {
    s.geometry = parse_geometry(detail::require_field<std::string>(meta, "geometry"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptHeader) throw;
    throw Error(ErrorKind::CorruptHeader, e.what());
  }
  const bool centered = detail::require_field<bool>(meta, "centered");
  s.centered = centered;
  s.class_balanced = meta.contains("class_balanced") ? detail::require_field<bool>(meta, "class_balanced") : true;
  if (s.geometry == Geometry::Sphere && centered) throw Error(ErrorKind::CorruptHeader, "sphere subspaces are never centered");

  const auto dd = static_cast<std::size_t>(d);
  const auto kk = static_cast<std::size_t>(k);
  const bool has_point = s.geometry == Geometry::Sphere;
  const std::size_t want = 8 * ((has_point ? dd : 0) + dd * kk + kk);
  detail::check_payload_size(bytes.size() - at, want);

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + at;
  if (has_point) {
    Vector point(d);
    for (Eigen::Index i = 0; i < d; ++i, p += 8) point(i) = detail::get_f64(p);
    const double norm = point.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-9) {
      throw Error(ErrorKind::CorruptPayload, "base point is not unit norm");
    }
    s.base_point = UnitVector(std::move(point));
  }
  s.basis.resize(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < d; ++i, p += 8) s.basis(i, j) = detail::get_f64(p);
  }
  s.eigenvalues.resize(k);
  for (Eigen::Index j = 0; j < k; ++j, p += 8) s.eigenvalues(j) = detail::get_f64(p);
  s.validate();
  return s;
}

inline Subspace read_subspace(const std::filesystem::path& path) { return decode_subspace(detail::read_file(path)); }

inline void write_subspace(const Subspace& s, const std::filesystem::path& path) {
  detail::write_file(path, encode_subspace(s));
}

// ---------------------------------------------------------------- word lists

/// ASCII case folding; bytes outside ASCII are compared verbatim.
inline std::string fold_case(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80) ch = static_cast<char>(std::tolower(u));
  }
  return out;
}

/// Drops every word that occurs (case-insensitively) in two or more lists,
/// and repeated occurrences within a list. Order is otherwise preserved.
inline std::vector<std::vector<std::string>> dedupe_wordlists(const std::vector<std::vector<std::string>>& lists) {
  std::unordered_map<std::string, std::size_t> owner;
  std::unordered_set<std::string> shared;
  for (std::size_t c = 0; c < lists.size(); ++c) {
    for (const auto& w : lists[c]) {
      const auto key = fold_case(w);
      auto [it, inserted] = owner.emplace(key, c);
      if (!inserted && it->second != c) shared.insert(key);
    }
  }
  std::vector<std::vector<std::string>> out(lists.size());
  for (std::size_t c = 0; c < lists.size(); ++c) {
    std::unordered_set<std::string> kept;
    for (const auto& w : lists[c]) {
      const auto key = fold_case(w);
      if (shared.count(key) || !kept.insert(key).second) continue;
      out[c].push_back(w);
    }
  }
  return out;
}

/// One word per line; surrounding whitespace is trimmed and blank lines skipped.
inline std::vector<std::string> read_wordlist(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r\n");
    words.push_back(line.substr(b, e - b + 1));
  }
  return words;
}

inline std::vector<std::vector<std::string>> dedupe_wordlist_files(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::vector<std::string>> lists;
  lists.reserve(paths.size());
  for (const auto& p : paths) lists.push_back(read_wordlist(p));
  return dedupe_wordlists(lists);
}

inline void write_wordlist(const std::vector<std::string>& words, const std::filesystem::path& path) {
  std::string out;
  for (const auto& w : words) {
    out += w;
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

}  // namespace pss
