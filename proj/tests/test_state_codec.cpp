#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <random>

#include <tablebdd/grid_config.hpp>
#include <tablebdd/state_codec.hpp>

#include "test_helpers.hpp"

using namespace tablebdd;

TEST_CASE("gray code matches the i xor (i >> 1) oracle")
{
  CHECK(gray_encode(0, 4) == 0b0000);
  CHECK(gray_encode(5, 4) == 0b0111);
  CHECK(gray_encode(9, 4) == 0b1101);
  for (uint32_t w : {1u, 4u, 6u})
    for (uint32_t i = 0; i < (1u << w); ++i)
      CHECK(gray_encode(i, w) == (i ^ (i >> 1)));
  CHECK_THROWS_AS(gray_encode(16, 4), error);
}

TEST_CASE("gray decode inverts encode")
{
  CHECK(gray_decode(0b0000) == 0);
  CHECK(gray_decode(0b0111) == 5);
  for (uint32_t i = 0; i < (1u << 6); ++i)
    CHECK(gray_decode(gray_encode(i, 6)) == i);
}

TEST_CASE("gray adjacency: consecutive indices differ in exactly one bit")
{
  for (uint32_t w : {4u, 6u}) {
    for (uint32_t i = 0; i + 1 < (1u << w); ++i) {
      uint32_t diff = gray_encode(i, w) ^ gray_encode(i + 1, w);
      CHECK(std::popcount(diff) == 1);
    }
  }
}

TEST_CASE("gray encode is injective per width")
{
  for (uint32_t w : {4u, 6u}) {
    std::vector<bool> seen(1u << w, false);
    for (uint32_t i = 0; i < (1u << w); ++i) {
      uint32_t c = gray_encode(i, w);
      CHECK_FALSE(seen[c]);
      seen[c] = true;
    }
  }
}

TEST_CASE("standard grid shape and bit layout")
{
  quantization_grid g = quantization_grid::standard();
  CHECK(g.cardinalities() == standard_cardinalities);
  CHECK(g.state_count() == 89'799'840ull);
  g.validate(false);

  bit_layout l = bit_layout::for_grid(g);
  CHECK(l.widths == std::array<uint32_t, 6>{4, 6, 6, 6, 4, 4});
  CHECK(l.state_bits() == 30);
  CHECK(l.var_count() == 32);
  CHECK(l.var_name(0) == "bdd1");
  CHECK(l.var_name(1) == "bdd0");
  CHECK(l.var_name(2) == "tau0");
  CHECK(l.var_name(6) == "rho0");
  CHECK(l.var_name(31) == "v_int3");
  for (uint32_t v = 0; v < l.var_count(); ++v)
    CHECK(l.var_by_name(l.var_name(v)) == v);

  // the default rho grid is 1550 ft per step
  CHECK(g.value(dimension::rho, 1) == Catch::Approx(1550.0));
}

TEST_CASE("non-standard cardinalities need relaxed validation")
{
  quantization_grid g = quantization_grid::linear({4, 8, 8, 8, 4, 4});
  g.validate(true);
  CHECK_THROWS_AS(g.validate(false), error);
}

TEST_CASE("row-major offsets round-trip")
{
  quantization_grid g = quantization_grid::linear({3, 4, 2, 5, 2, 3});
  for (uint64_t off = 0; off < g.state_count(); ++off) {
    state_index s = state_at(g, off);
    CHECK(row_major_offset(g, s) == off);
  }
}

TEST_CASE("value bounds to index sets")
{
  quantization_grid g = quantization_grid::standard();
  auto all = value_bounds_to_index_set(g, dimension::tau, -1e9, 1e9);
  CHECK(all.size() == 10);
  // strictly between two adjacent rho breakpoints: 1550k grid, (100, 1500)
  CHECK(value_bounds_to_index_set(g, dimension::rho, 100.0, 1500.0).empty());
  auto rho = value_bounds_to_index_set(g, dimension::rho, 8500.0, 62000.0);
  REQUIRE(rho.size() == 35);
  CHECK(rho.front() == 6);
  CHECK(rho.back() == 40);
  CHECK_THROWS_AS(value_bounds_to_index_set(g, dimension::rho, 5.0, 1.0), error);
}

TEST_CASE("state cubes fix every bit")
{
  quantization_grid g = quantization_grid::linear({3, 2, 2, 2, 2, 2});
  bit_layout l = bit_layout::for_grid(g);
  bdd_manager m(l.var_count());

  state_index zero{};
  node_ref cz = state_to_cube(m, l, g, zero);
  // all-zero state: every literal negated, one node per state bit
  CHECK(m.node_count(cz) == l.state_bits());
  assignment a;
  l.assign_state(zero, a);
  a.set(bit_layout::var_bdd1, false);
  a.set(bit_layout::var_bdd0, false);
  CHECK(m.eval(cz, a));
  CHECK(m.sat_count(cz, l.state_bits()) == 1);

  state_index other{};
  other[dimension::tau] = 2;
  node_ref co = state_to_cube(m, l, g, other);
  CHECK(m.apply_and(cz, co) == m.bdd_false());

  state_index bad{};
  bad[dimension::rho] = 9;
  CHECK_THROWS_AS(state_to_cube(m, l, g, bad), error);
}

TEST_CASE("cube partition across one dimension")
{
  quantization_grid g = quantization_grid::linear({3, 2, 2, 2, 2, 2});
  bit_layout l = bit_layout::for_grid(g);
  bdd_manager m(l.var_count());
  // vary tau, others fixed: the disjunction counts the tau cardinality
  node_ref acc = m.bdd_false();
  for (uint32_t i = 0; i < g.cardinality(dimension::tau); ++i) {
    state_index s{};
    s[dimension::tau] = i;
    acc = m.apply_or(acc, state_to_cube(m, l, g, s));
  }
  CHECK(m.sat_count(acc, l.state_bits()) == g.cardinality(dimension::tau));
}

TEST_CASE("domain validity counts exactly the valid states")
{
  {
    quantization_grid g = quantization_grid::linear({3, 2, 2, 2, 2, 2});
    bit_layout l = bit_layout::for_grid(g);
    bdd_manager m(l.var_count());
    node_ref v = domain_validity(m, l, g);
    CHECK(m.sat_count(v, l.state_bits()) == g.state_count());
  }
  {
    quantization_grid g = quantization_grid::standard();
    bit_layout l = bit_layout::for_grid(g);
    bdd_manager m(l.var_count());
    node_ref v = domain_validity(m, l, g);
    CHECK(m.sat_count(v, 30) == 89'799'840ull);
  }
}

TEST_CASE("assignment decode inverts state encoding")
{
  quantization_grid g = quantization_grid::linear({10, 5, 7, 3, 4, 12});
  bit_layout l = bit_layout::for_grid(g);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    state_index s;
    for (size_t d = 0; d < 6; ++d)
      s.i[d] = static_cast<uint32_t>(rng() % g.cardinalities()[d]);
    assignment a;
    l.assign_state(s, a);
    auto idx = l.decode_state_bits(a);
    CHECK(idx == s.i);
  }
}

TEST_CASE("grid config files")
{
  auto j = nlohmann::json::parse(R"({
    "tau":   {"min": 0.0, "max": 100.0, "count": 10},
    "rho":   {"min": 0.0, "max": 62000.0, "count": 41},
    "theta": {"min": -3.14159265358979, "max": 3.14159265358979, "count": 39},
    "psi":   {"min": -3.14159265358979, "max": 3.14159265358979, "count": 39},
    "v_own": {"breakpoints": [60, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1200]},
    "v_int": {"min": 60.0, "max": 1200.0, "count": 12}
  })");
  quantization_grid g = grid_from_json(j, false);
  CHECK(g.cardinalities() == standard_cardinalities);
  CHECK(g.value(dimension::v_own, 2) == 200.0);

  auto missing = j;
  missing.erase("psi");
  CHECK_THROWS_AS(grid_from_json(missing, false), error);

  auto decreasing = j;
  decreasing["v_own"] = {{"breakpoints", {3.0, 2.0, 1.0}}};
  CHECK_THROWS_AS(grid_from_json(decreasing, true), error);

  // fingerprints distinguish grids and are stable
  CHECK(g.fingerprint() == grid_from_json(j, false).fingerprint());
  CHECK(g.fingerprint() != quantization_grid::standard().fingerprint());
  CHECK(quantization_grid::standard().fingerprint() ==
        resolve_grid_spec("default", false).fingerprint());
}
