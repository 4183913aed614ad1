#pragma once

// Vector files.
//
// Binary ("FJLV"), all integers little-endian:
//   offset 0   char[4]  magic "FJLV"
//   offset 4   u16      version (1)
//   offset 6   u32      d
//   offset 10  u64      count
//   offset 18  f64[count * d], row-major, IEEE-754 little-endian
//
// Text: CSV, one vector per line, optionally preceded by a "# d=<d>" line.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "fastjl/error.hpp"
#include "fastjl/transform.hpp"

namespace fastjl {

struct VectorDataset {
  std::size_t d = 0;
  std::vector<std::vector<double>> vectors;
  std::string source;

  [[nodiscard]] std::size_t size() const noexcept { return vectors.size(); }
};

enum class VectorFormat { Binary, Csv };

class DatasetError : public Error {
 public:
  enum class Kind {
    Unreadable,         ///< path cannot be opened / written
    MalformedHeader,    ///< bad magic, version, or header line
    DimensionMismatch,  ///< a record does not have d values
    Malformed,          ///< empty file, truncated payload, unparsable number
  };

  DatasetError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kFjlvMagic[4] = {'F', 'J', 'L', 'V'};
inline constexpr std::uint16_t kFjlvVersion = 1;
inline constexpr std::size_t kFjlvHeaderSize = 18;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xffu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | p[i]);
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetError(DatasetError::Kind::Unreadable, "cannot open " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw DatasetError(DatasetError::Kind::Unreadable, "error reading " + path.string());
  }
  return bytes;
}

inline VectorDataset parse_binary(const std::string& bytes, const std::string& source) {
  if (bytes.size() < kFjlvHeaderSize) {
    throw DatasetError(DatasetError::Kind::MalformedHeader,
                       source + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != kFjlvVersion) {
    throw DatasetError(DatasetError::Kind::MalformedHeader,
                       source + ": unsupported version " + std::to_string(version));
  }
  const auto d = get_le<std::uint32_t>(p + 6);
  const auto count = get_le<std::uint64_t>(p + 10);
  if (d == 0 || count == 0) {
    throw DatasetError(DatasetError::Kind::MalformedHeader,
                       source + ": header declares d=" + std::to_string(d) +
                           " count=" + std::to_string(count));
  }
  const std::uint64_t payload = bytes.size() - kFjlvHeaderSize;
  if (count > payload / 8 / d || payload != count * d * 8) {
    throw DatasetError(DatasetError::Kind::Malformed,
                       source + ": payload of " + std::to_string(payload) +
                           " bytes does not hold " + std::to_string(count) + " x " +
                           std::to_string(d) + " doubles");
  }
  VectorDataset ds{d, {}, source};
  ds.vectors.reserve(count);
  const unsigned char* q = p + kFjlvHeaderSize;
  for (std::uint64_t r = 0; r < count; ++r) {
    std::vector<double> row(d);
    for (auto& x : row) {
      x = std::bit_cast<double>(get_le<std::uint64_t>(q));
      q += 8;
    }
    ds.vectors.push_back(std::move(row));
  }
  return ds;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline VectorDataset parse_csv(const std::string& text, const std::string& source) {
  VectorDataset ds{0, {}, source};
  bool declared = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (declared || !ds.vectors.empty()) {
        throw DatasetError(DatasetError::Kind::MalformedHeader,
                           source + ": header on line " + std::to_string(line_no) +
                               " must precede all rows");
      }
      const std::string_view body = trim(line.substr(1));
      std::size_t d = 0;
      const auto* last = body.data() + body.size();
      if (body.size() < 3 || body.substr(0, 2) != "d=" ||
          std::from_chars(body.data() + 2, last, d).ptr != last || d == 0) {
        throw DatasetError(DatasetError::Kind::MalformedHeader,
                           source + ": expected '# d=<dimension>' on line " +
                               std::to_string(line_no));
      }
      ds.d = d;
      declared = true;
      continue;
    }
    std::vector<double> row;
    std::string_view rest = line;
    for (;;) {
      const std::size_t comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw DatasetError(DatasetError::Kind::Malformed,
                           source + ": row " + std::to_string(ds.vectors.size() + 1) + " (line " +
                               std::to_string(line_no) + "): cannot parse '" + std::string(field) +
                               "'");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (ds.d == 0) ds.d = row.size();
    if (row.size() != ds.d) {
      throw DatasetError(DatasetError::Kind::DimensionMismatch,
                         source + ": row " + std::to_string(ds.vectors.size() + 1) + " (line " +
                             std::to_string(line_no) + ") has " + std::to_string(row.size()) +
                             " values, expected d=" + std::to_string(ds.d));
    }
    ds.vectors.push_back(std::move(row));
  }
  if (ds.vectors.empty()) {
    throw DatasetError(DatasetError::Kind::Malformed, source + ": no vectors in file");
  }
  return ds;
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline VectorFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? VectorFormat::Csv : VectorFormat::Binary;
}

/// Reads either format; binary is recognised by its magic.
inline VectorDataset read_vectors(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  if (bytes.empty()) {
    throw DatasetError(DatasetError::Kind::Malformed, path.string() + ": empty file");
  }
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kFjlvMagic, 4) == 0) {
    return detail::parse_binary(bytes, path.string());
  }
  return detail::parse_csv(bytes, path.string());
}

inline std::string encode_vectors(const VectorDataset& ds, VectorFormat format) {
  for (std::size_t r = 0; r < ds.vectors.size(); ++r) {
    if (ds.vectors[r].size() != ds.d) {
      throw DatasetError(DatasetError::Kind::DimensionMismatch,
                         "vector " + std::to_string(r + 1) + " has length " +
                             std::to_string(ds.vectors[r].size()) + ", expected " +
                             std::to_string(ds.d));
    }
  }
  std::string out;
  if (format == VectorFormat::Binary) {
    if (ds.d == 0 || ds.d > 0xffffffffu) {
      throw DatasetError(DatasetError::Kind::MalformedHeader, "d must fit in u32 and be > 0");
    }
    out.reserve(kFjlvHeaderSize + ds.vectors.size() * ds.d * 8);
    out.append(kFjlvMagic, 4);
    detail::put_le<std::uint16_t>(out, kFjlvVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.d));
    detail::put_le<std::uint64_t>(out, ds.vectors.size());
    for (const auto& row : ds.vectors) {
      for (double x : row) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
    }
  } else {
    out += "# d=" + std::to_string(ds.d) + "\n";
    for (const auto& row : ds.vectors) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out.push_back(',');
        detail::append_double(out, row[j]);
      }
      out.push_back('\n');
    }
  }
  return out;
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(DatasetError::Kind::Unreadable, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DatasetError(DatasetError::Kind::Unreadable, "error writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DatasetError(DatasetError::Kind::Unreadable, "cannot rename onto " + path.string());
  }
}

inline void write_vectors(const std::filesystem::path& path, const VectorDataset& ds) {
  write_file_atomically(path, encode_vectors(ds, format_for_path(path)));
}

inline void write_vectors(const std::filesystem::path& path, const VectorDataset& ds,
                          VectorFormat format) {
  write_file_atomically(path, encode_vectors(ds, format));
}

/// Zero-pads every vector to the next power of two.
inline VectorDataset pad_to_power_of_two(VectorDataset ds) {
  const std::size_t padded = next_power_of_two(std::max<std::size_t>(ds.d, 1));
  if (padded == ds.d) return ds;
  for (auto& v : ds.vectors) v.resize(padded, 0.0);
  ds.d = padded;
  return ds;
}

}  // namespace fastjl
