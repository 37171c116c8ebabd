#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "llg/field_io.hpp"
#include "llg/mesh.hpp"

using namespace llg;
using Catch::Approx;

TEST_CASE("make_mesh spacing and centers", "[mesh]") {
  const MeshSpec m = make_mesh({4, 1, 1}, {1.0, 1.0, 1.0});
  CHECK(m.spacing[0] == 0.25);
  CHECK(m.center(0, 0) == Approx(0.125));
  CHECK(m.center(0, 3) == Approx(0.875));
  CHECK(m.cell_count() == 4);
  CHECK(m.active_axes() == 1);
  // ghosts only along the active axis
  CHECK(m.storage_size() == 6);

  const MeshSpec m3 = make_mesh({3, 2, 5}, {3.0, 1.0, 0.5}, 2);
  CHECK(m3.spacing[2] == Approx(0.1));
  CHECK(m3.storage_size() == std::size_t(7 * 6 * 9));
}

TEST_CASE("make_mesh rejects bad input", "[mesh]") {
  CHECK_THROWS_AS(make_mesh({0, 1, 1}, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(make_mesh({2, 2, 2}, {1, -1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(make_mesh({2, 2, 2}, {1, 1, 1}, 3), std::invalid_argument);
}

TEST_CASE("interior offsets are a bijection onto distinct storage slots", "[mesh]") {
  for (int g : {1, 2}) {
    const MeshSpec m = make_mesh({5, 3, 4}, {1, 1, 1}, g);
    std::set<std::size_t> seen;
    for_each_cell(m, [&](int i, int j, int l) {
      const std::size_t o = m.offset(i, j, l);
      CHECK(o < m.storage_size());
      seen.insert(o);
    });
    CHECK(seen.size() == m.cell_count());
    // x fastest
    CHECK(m.offset(1, 0, 0) - m.offset(0, 0, 0) == 1);
    CHECK(std::ptrdiff_t(m.offset(0, 1, 0) - m.offset(0, 0, 0)) == m.stride(1));
    CHECK(std::ptrdiff_t(m.offset(0, 0, 1) - m.offset(0, 0, 0)) == m.stride(2));
  }
}

TEST_CASE("pack and unpack round trip", "[mesh]") {
  const MeshSpec m = make_mesh({3, 4, 2}, {1, 1, 1});
  VectorField f(m);
  for_each_cell(m, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) f(c, i, j, l) = 100 * c + i + 10 * j + 1000 * l;
  });
  std::vector<double> packed(m.cell_count());
  VectorField g(m);
  for (int c = 0; c < 3; ++c) {
    pack_interior(f, c, packed.data());
    CHECK(packed[0] == 100 * c);
    CHECK(packed[1] == 100 * c + 1);
    CHECK(packed[3] == 100 * c + 10);
    unpack_interior(packed.data(), g, c);
  }
  for_each_cell(m, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) CHECK(g(c, i, j, l) == f(c, i, j, l));
  });
}

TEST_CASE("field dumps round trip bit for bit", "[mesh][io]") {
  const MeshSpec m = make_mesh({3, 2, 2}, {1, 1, 1});
  VectorField f(m);
  double v = 0.1;
  for_each_cell(m, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) f(c, i, j, l) = (v *= -1.37);
  });
  std::stringstream ss;
  write_field(ss, f);
  const std::string bytes = ss.str();
  CHECK(bytes.rfind("llgfield v1 3 2 2 3\n", 0) == 0);
  CHECK(bytes.size() == std::string("llgfield v1 3 2 2 3\n").size() + 8 * 36);

  const MeshSpec m2 = make_mesh({3, 2, 2}, {1, 1, 1}, 2);
  std::stringstream in(bytes);
  const VectorField g = read_field<3>(in, m2);
  for_each_cell(m, [&](int i, int j, int l) {
    for (int c = 0; c < 3; ++c) CHECK(g(c, i, j, l) == f(c, i, j, l));
  });
}

TEST_CASE("corrupt dumps are rejected", "[mesh][io]") {
  const MeshSpec m = make_mesh({2, 2, 1}, {1, 1, 1});
  VectorField f = fill_value(m, {1, 2, 3});
  std::stringstream ss;
  write_field(ss, f);
  const std::string good = ss.str();

  auto read = [&](const std::string& s, const MeshSpec& mesh) {
    std::stringstream in(s);
    return read_field<3>(in, mesh);
  };
  CHECK_NOTHROW(read(good, m));
  CHECK_THROWS_AS(read(good.substr(0, good.size() - 3), m), std::runtime_error);
  CHECK_THROWS_AS(read(good + "x", m), std::runtime_error);
  CHECK_THROWS_AS(read("llgfield v2" + good.substr(11), m), std::runtime_error);
  CHECK_THROWS_AS(read(good, make_mesh({4, 1, 1}, {1, 1, 1})), std::runtime_error);
  CHECK_THROWS_AS(read("", m), std::runtime_error);
  std::stringstream s1(good);
  CHECK_THROWS_AS(read_field<1>(s1, m), std::runtime_error);
}
