#pragma once

// Binary field dumps.
//
// Layout: a single text line `llgfield v1 Nx Ny Nz ncomp\n`, followed by
// ncomp blocks of Nx*Ny*Nz little-endian IEEE-754 doubles, one block per
// component, x fastest. Ghost layers are not stored.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llg/mesh.hpp"

namespace llg {

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
}

}  // namespace detail

struct FieldDumpHeader {
  Index3 dims{};
  int ncomp = 0;
};

inline std::string format_dump_header(const Index3& dims, int ncomp) {
  std::ostringstream os;
  os << "llgfield v1 " << dims[0] << ' ' << dims[1] << ' ' << dims[2] << ' ' << ncomp << '\n';
  return os.str();
}

template <int NC>
void write_field(std::ostream& os, const Field<NC>& f) {
  const MeshSpec& m = f.mesh();
  os << format_dump_header(m.dims, NC);
  std::vector<double> packed(m.cell_count());
  for (int c = 0; c < NC; ++c) {
    pack_interior(f, c, packed.data());
    for (double v : packed) {
      std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!os) throw std::runtime_error("write_field: stream write failed");
}

template <int NC>
void write_field(const std::string& path, const Field<NC>& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_field: cannot open " + path);
  write_field(os, f);
}

inline FieldDumpHeader read_dump_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_field: missing header");
  std::istringstream hs(line);
  std::string magic, version;
  FieldDumpHeader h;
  hs >> magic >> version >> h.dims[0] >> h.dims[1] >> h.dims[2] >> h.ncomp;
  if (!hs || magic != "llgfield" || version != "v1")
    throw std::runtime_error("read_field: malformed header '" + line + "'");
  std::string trailing;
  if (hs >> trailing) throw std::runtime_error("read_field: trailing tokens in header");
  if (h.dims[0] < 1 || h.dims[1] < 1 || h.dims[2] < 1 || h.ncomp < 1)
    throw std::runtime_error("read_field: nonpositive sizes in header");
  return h;
}

/// Reads a dump into a field on `mesh`; the header must match the mesh
/// dimensions and component count exactly.
template <int NC>
Field<NC> read_field(std::istream& is, const MeshSpec& mesh) {
  FieldDumpHeader h = read_dump_header(is);
  if (h.dims != mesh.dims || h.ncomp != NC)
    throw std::runtime_error("read_field: header does not match target mesh");
  Field<NC> f(mesh);
  std::vector<double> packed(mesh.cell_count());
  for (int c = 0; c < NC; ++c) {
    for (double& v : packed) {
      std::uint64_t bits = 0;
      is.read(reinterpret_cast<char*>(&bits), sizeof bits);
      if (!is) throw std::runtime_error("read_field: truncated payload");
      v = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    unpack_interior(packed.data(), f, c);
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("read_field: trailing bytes after payload");
  return f;
}

template <int NC>
Field<NC> read_field(const std::string& path, const MeshSpec& mesh) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  return read_field<NC>(is, mesh);
}

}  // namespace llg
