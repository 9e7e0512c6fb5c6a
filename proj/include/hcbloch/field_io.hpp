#pragma once

// Binary field dumps: a 32-byte little-endian header followed by float64
// values (little-endian), cell-major.
//
//   bytes  0..7   magic "HCBFIELD"
//   bytes  8..11  u32 dimension d
//   bytes 12..23  u32 cells per axis (3 entries; unused axes are 1)
//   bytes 24..27  u32 float64 components per cell
//   bytes 28..31  u32 kind: 0 = real scalar, 1 = complex scalar, 2 = coefficient matrix (d*d)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hcbloch/error.hpp"
#include "hcbloch/grid.hpp"
#include "hcbloch/microstructure.hpp"

namespace hcbloch {

enum class DumpKind : std::uint32_t { real_scalar = 0, complex_scalar = 1, coefficient = 2 };

struct FieldDump {
  PeriodicGrid grid;
  DumpKind kind = DumpKind::real_scalar;
  std::uint32_t components = 1;
  std::vector<double> data;
};

namespace detail {

inline constexpr char kDumpMagic[8] = {'H', 'C', 'B', 'F', 'I', 'E', 'L', 'D'};

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
}

inline double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = bits << 8 | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::vector<unsigned char> encode_dump(const FieldDump& dump) {
  if (dump.data.size() != dump.grid.size() * dump.components) throw Error("dump payload size mismatch");
  std::vector<unsigned char> out(detail::kDumpMagic, detail::kDumpMagic + 8);
  out.reserve(32 + 8 * dump.data.size());
  detail::put_u32(out, static_cast<std::uint32_t>(dump.grid.dim()));
  for (int k = 0; k < 3; ++k)
    detail::put_u32(out, static_cast<std::uint32_t>(k < dump.grid.dim() ? dump.grid.cells(k) : 1));
  detail::put_u32(out, dump.components);
  detail::put_u32(out, static_cast<std::uint32_t>(dump.kind));
  for (double v : dump.data) detail::put_f64(out, v);
  return out;
}

inline FieldDump decode_dump(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 32 || std::memcmp(bytes.data(), detail::kDumpMagic, 8) != 0)
    throw Error("not a field dump (bad magic)");
  const auto d = static_cast<int>(detail::get_u32(&bytes[8]));
  if (d < 1 || d > 3) throw Error("field dump has invalid dimension");
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) n[k] = static_cast<int>(detail::get_u32(&bytes[12 + 4 * k]));
  FieldDump dump;
  dump.grid = make_grid(d, std::span<const int>(n.data(), static_cast<std::size_t>(d)));
  dump.components = detail::get_u32(&bytes[24]);
  const auto kind = detail::get_u32(&bytes[28]);
  if (kind > 2) throw Error("field dump has unknown kind");
  dump.kind = static_cast<DumpKind>(kind);
  const std::size_t count = dump.grid.size() * dump.components;
  if (bytes.size() != 32 + 8 * count) throw Error("field dump payload is truncated or oversized");
  dump.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) dump.data[i] = detail::get_f64(&bytes[32 + 8 * i]);
  return dump;
}

inline void write_dump(const std::string& path, const FieldDump& dump) {
  const auto bytes = encode_dump(dump);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write failed: " + path);
}

inline FieldDump read_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open field dump " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_dump(bytes);
}

inline FieldDump to_dump(const CoefficientField& f) {
  const auto d = static_cast<std::uint32_t>(f.dim());
  return FieldDump{f.grid(), DumpKind::coefficient, d * d, f.blocks()};
}

inline FieldDump to_dump(const RealField& f) { return FieldDump{f.grid, DumpKind::real_scalar, 1, f.values}; }

inline FieldDump to_dump(const ComplexField& f) {
  std::vector<double> data;
  data.reserve(2 * f.size());
  for (const auto& z : f.values) {
    data.push_back(z.real());
    data.push_back(z.imag());
  }
  return FieldDump{f.grid, DumpKind::complex_scalar, 2, std::move(data)};
}

inline CoefficientField coefficient_from_dump(const FieldDump& dump) {
  const int d = dump.grid.dim();
  if (dump.kind == DumpKind::real_scalar && dump.components == 1)
    return CoefficientField::isotropic(dump.grid, dump.data);
  if (dump.kind != DumpKind::coefficient || dump.components != static_cast<std::uint32_t>(d * d))
    throw Error("field dump does not hold a coefficient field");
  auto f = CoefficientField::matrices(dump.grid, dump.data);
  if (!(min_eigenvalue(f) > 0.0)) throw Error("coefficient dump is not positive definite");
  return f;
}

inline CoefficientField read_coefficient_dump(const std::string& path) {
  return coefficient_from_dump(read_dump(path));
}

}  // namespace hcbloch
