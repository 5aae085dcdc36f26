#pragma once

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "epimem/error.hpp"

namespace epimem::detail {

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  EPIMEM_CHECK(in.gcount() == static_cast<std::streamsize>(sizeof(T)),
               "binary data truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

template <class T>
void put_plane(std::ostream& out, const std::vector<T>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
  } else {
    for (const T& x : v) put_le(out, x);
  }
}

template <class T>
std::vector<T> get_plane(std::istream& in, std::size_t n) {
  std::vector<T> v(n);
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    EPIMEM_CHECK(in.gcount() == static_cast<std::streamsize>(n * sizeof(T)),
                 "binary data truncated");
  } else {
    for (auto& x : v) x = get_le<T>(in);
  }
  return v;
}

}  // namespace epimem::detail
