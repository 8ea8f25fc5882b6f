#pragma once

// Flat binary field format, little-endian throughout:
//
//   offset  size  content
//   0       4     magic "LLGF"
//   4       4     u32 version (1)
//   8       4     u32 dimension n
//   12      4     u32 points per axis N
//   16      8     f64 box length L
//   24      4     u32 value kind (0 real, 1 complex)
//   28      4     u32 component count
//   32      ...   components one after another, each N^n values in row-major
//                 order as f64 (real) or interleaved re/im f64 pairs (complex)

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "llg/error.hpp"
#include "llg/field.hpp"

namespace llg::io {

inline constexpr std::uint32_t kFieldFormatVersion = 1;

enum class ValueKind : std::uint32_t { Real = 0, Complex = 1 };

struct FieldHeader {
  GridSpec grid;
  ValueKind kind = ValueKind::Real;
  std::uint32_t components = 0;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::Io, "truncated field data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

inline void put_header(std::vector<std::uint8_t>& out, const GridSpec& g, ValueKind kind, std::size_t comps) {
  for (char c : {'L', 'L', 'G', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kFieldFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(g.dimension));
  put_u32(out, static_cast<std::uint32_t>(g.points));
  put_f64(out, g.length);
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u32(out, static_cast<std::uint32_t>(comps));
}

inline FieldHeader read_header(const std::vector<std::uint8_t>& bytes, Reader& r) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "LLGF", 4) != 0)
    throw Error(ErrorKind::Io, "bad magic, not an LLGF field file");
  r.u32();  // magic, already checked
  std::uint32_t version = r.u32();
  if (version != kFieldFormatVersion)
    throw Error(ErrorKind::Io, "unsupported field format version " + std::to_string(version));
  FieldHeader h;
  int n = static_cast<int>(r.u32());
  int N = static_cast<int>(r.u32());
  double L = r.f64();
  h.grid = GridSpec(n, N, L);
  std::uint32_t kind = r.u32();
  if (kind > 1) throw Error(ErrorKind::Io, "unknown value kind " + std::to_string(kind));
  h.kind = static_cast<ValueKind>(kind);
  h.components = r.u32();
  std::size_t per = h.kind == ValueKind::Real ? 8 : 16;
  if (r.remaining() != per * h.components * h.grid.size())
    throw Error(ErrorKind::Io, "field payload size does not match header");
  return h;
}

inline std::vector<std::uint8_t> load_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void save_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const RealVectorField& v) {
  const GridSpec& g = common_grid(v);
  std::vector<std::uint8_t> out;
  out.reserve(32 + 8 * v.size() * g.size());
  detail::put_header(out, g, ValueKind::Real, v.size());
  for (const auto& c : v)
    for (double x : c) detail::put_f64(out, x);
  return out;
}

inline std::vector<std::uint8_t> encode(const ComplexVectorField& v) {
  const GridSpec& g = common_grid(v);
  std::vector<std::uint8_t> out;
  out.reserve(32 + 16 * v.size() * g.size());
  detail::put_header(out, g, ValueKind::Complex, v.size());
  for (const auto& c : v)
    for (const cplx& x : c) {
      detail::put_f64(out, x.real());
      detail::put_f64(out, x.imag());
    }
  return out;
}

inline FieldHeader peek_header(const std::vector<std::uint8_t>& bytes) {
  detail::Reader r(bytes);
  return detail::read_header(bytes, r);
}

inline RealVectorField decode_real(const std::vector<std::uint8_t>& bytes) {
  detail::Reader r(bytes);
  FieldHeader h = detail::read_header(bytes, r);
  if (h.kind != ValueKind::Real) throw Error(ErrorKind::Io, "expected a real-valued field");
  RealVectorField out = make_real_vector(h.grid, h.components);
  for (auto& c : out)
    for (double& x : c) x = r.f64();
  return out;
}

inline ComplexVectorField decode_complex(const std::vector<std::uint8_t>& bytes) {
  detail::Reader r(bytes);
  FieldHeader h = detail::read_header(bytes, r);
  if (h.kind != ValueKind::Complex) throw Error(ErrorKind::Io, "expected a complex-valued field");
  ComplexVectorField out = make_complex_vector(h.grid, h.components);
  for (auto& c : out)
    for (cplx& x : c) {
      double re = r.f64();
      double im = r.f64();
      x = cplx(re, im);
    }
  return out;
}

inline void write_field(const std::string& path, const RealVectorField& v) {
  detail::save_bytes(path, encode(v));
}
inline void write_field(const std::string& path, const ComplexVectorField& v) {
  detail::save_bytes(path, encode(v));
}
inline void write_field(const std::string& path, const RealField& f) { write_field(path, RealVectorField{f}); }
inline void write_field(const std::string& path, const ComplexField& f) {
  write_field(path, ComplexVectorField{f});
}

inline RealVectorField read_real_field(const std::string& path) {
  return decode_real(detail::load_bytes(path));
}
inline ComplexVectorField read_complex_field(const std::string& path) {
  return decode_complex(detail::load_bytes(path));
}

}  // namespace llg::io
