#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "loadcast/core/errors.hpp"

// Little-endian byte-buffer helpers shared by the binary artifact formats.

namespace loadcast::binary {

static_assert(std::endian::native == std::endian::little, "binary artifacts assume a little-endian host");

/// 64-bit FNV-1a over the first n bytes.
inline std::uint64_t fnv1a(const std::string& bytes, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
void put_array(std::string& out, const T* v, std::size_t n) {
  out.append(reinterpret_cast<const char*>(v), n * sizeof(T));
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

/// Bounds-checked sequential reader; running off the end is a FormatError.
class Reader {
 public:
  Reader(const std::string& bytes, std::string path, std::string what = "file")
      : bytes_(bytes), path_(std::move(path)), what_(std::move(what)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
  void array(T* dst, std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(T)) truncated();
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
  }

  void doubles(double* dst, std::size_t n) { array(dst, n); }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void truncated() const { throw FormatError(path_ + ": " + what_ + " is truncated"); }

 private:
  void need(std::size_t n) {
    if (n > bytes_.size() - pos_) truncated();
  }

  const std::string& bytes_;
  std::string path_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace loadcast::binary
