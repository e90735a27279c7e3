#pragma once

// TNS1 binary tensor files: "TNS1", three uint64 LE dims (l, m, n), then
// l*m*n float64 LE values in vec order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "tpc/errors.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8))
    throw InvalidArgument("TNS1: truncated input");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace detail

inline void write_tns(std::ostream& os, const Tensor3& t) {
  os.write("TNS1", 4);
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.rows()));
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.cols()));
  detail::put_u64_le(os, static_cast<std::uint64_t>(t.tubes()));
  for (double v : t.flat()) detail::put_u64_le(os, std::bit_cast<std::uint64_t>(v));
}

inline Tensor3 read_tns(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "TNS1", 4) != 0)
    throw InvalidArgument("TNS1: bad magic");
  const auto l = detail::get_u64_le(is);
  const auto m = detail::get_u64_le(is);
  const auto n = detail::get_u64_le(is);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (l > kLimit || m > kLimit || n > kLimit || (l && m && n && l * m > kLimit / n))
    throw InvalidArgument("TNS1: implausible dimensions");
  std::vector<double> data(static_cast<std::size_t>(l * m * n));
  for (double& v : data) v = std::bit_cast<double>(detail::get_u64_le(is));
  return Tensor3(static_cast<Index>(l), static_cast<Index>(m), static_cast<Index>(n),
                 std::move(data));
}

inline void save_tns(const std::filesystem::path& path, const Tensor3& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  write_tns(os, t);
  if (!os) throw InvalidArgument("write failed: " + path.string());
}

inline Tensor3 load_tns(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_tns(is);
}

}  // namespace tpc
