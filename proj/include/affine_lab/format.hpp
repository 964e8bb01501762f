// Locale-independent number formatting for CSV and JSON artifacts.
#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace affine_lab {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// Shortest form that keeps 17 significant digits ('.' decimal point).
inline std::string fmt_num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a, used for input digests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace affine_lab
