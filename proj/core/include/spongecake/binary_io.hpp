#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "spongecake/errors.hpp"

namespace spongecake::binio {

// Little-endian scalar I/O shared by the weight and table file formats.

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  static_assert(sizeof(T) == sizeof(U));
  const U bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw FormatError(std::string("truncated file while reading ") + what);
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  if (!in.read(got, 4)) throw FormatError("truncated file while reading magic");
  if (std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
}

}  // namespace spongecake::binio
