#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <tablebdd/compressor.hpp>

#include "test_helpers.hpp"

using namespace tablebdd;

namespace {

struct pipeline {
  quantization_grid grid;
  bit_layout layout;
  std::unique_ptr<bdd_manager> m;

  explicit pipeline(std::array<uint32_t, 6> cards)
      : grid(quantization_grid::linear(cards)), layout(bit_layout::for_grid(grid)),
        m(std::make_unique<bdd_manager>(layout.var_count()))
  {
    std::array<uint32_t, 2> sel{bit_layout::var_bdd1, bit_layout::var_bdd0};
    m->freeze(sel);
  }
};

advisory_table random_table(quantization_grid const& g, advisory a_prev, uint64_t seed)
{
  advisory_table t;
  t.grid = g;
  t.a_prev = a_prev;
  t.entries.resize(g.state_count());
  std::mt19937_64 rng(seed);
  for (auto& e : t.entries)
    e = static_cast<uint8_t>(rng() % 5);
  return t;
}

/* exhaustive root-vs-table agreement: the oracle for build_roots */
void check_roots_match_table(pipeline& p, advisory_roots const& r, advisory_table const& t)
{
  for (uint64_t off = 0; off < t.size(); ++off) {
    state_index s = state_at(t.grid, off);
    assignment a;
    p.layout.assign_state(s, a);
    a.set(bit_layout::var_bdd1, false);
    a.set(bit_layout::var_bdd0, false);
    for (uint32_t adv = 0; adv < 5; ++adv) {
      bool expect = t.at(off) == static_cast<advisory>(adv);
      REQUIRE(p.m->eval(r.roots[adv], a) == expect);
    }
  }
}

} // namespace

TEST_CASE("tiny grid: roots agree with the table on all 64 states")
{
  pipeline p({2, 2, 2, 2, 2, 2});
  advisory_table t = random_table(p.grid, advisory::coc, 7);
  advisory_roots r = build_roots(*p.m, t, p.layout, 16, reorder_policy::none);
  CHECK(r.chunks_processed == 4);
  check_roots_match_table(p, r, t);
  p.m->check_invariants();
}

TEST_CASE("chunk size does not change the result")
{
  pipeline p1({3, 3, 2, 2, 3, 2});
  pipeline p2({3, 3, 2, 2, 3, 2});
  advisory_table t = random_table(p1.grid, advisory::wl, 123);
  advisory_roots r1 = build_roots(*p1.m, t, p1.layout, 1, reorder_policy::none);
  advisory_roots r2 = build_roots(*p2.m, t, p2.layout, 1000000, reorder_policy::none);
  for (uint32_t a = 0; a < 5; ++a)
    CHECK(p1.m->node_count(r1.roots[a]) == p2.m->node_count(r2.roots[a]));
  check_roots_match_table(p1, r1, t);
  check_roots_match_table(p2, r2, t);
}

TEST_CASE("constant-COC table: the COC root is the domain-validity function")
{
  pipeline p({3, 5, 2, 2, 3, 2}); // tau and rho have unused codes
  advisory_table t;
  t.grid = p.grid;
  t.a_prev = advisory::coc;
  t.entries.assign(p.grid.state_count(), static_cast<uint8_t>(advisory::coc));
  advisory_roots r = build_roots(*p.m, t, p.layout, 64, reorder_policy::none);
  CHECK(r.roots[0] == r.validity);
  for (uint32_t a = 1; a < 5; ++a)
    CHECK(p.m->is_false(r.roots[a]));
}

TEST_CASE("a one-entry table difference moves exactly one state between roots")
{
  pipeline p1({2, 3, 2, 2, 2, 2});
  pipeline p2({2, 3, 2, 2, 2, 2});
  advisory_table t1 = random_table(p1.grid, advisory::sl, 55);
  advisory_table t2 = t1;
  state_index flip = state_at(t1.grid, 37);
  advisory old_a = t1.at(37);
  advisory new_a = old_a == advisory::wr ? advisory::sr : advisory::wr;
  t2.set(flip, new_a);

  advisory_roots r1 = build_roots(*p1.m, t1, p1.layout, 16, reorder_policy::none);
  advisory_roots r2 = build_roots(*p2.m, t2, p2.layout, 16, reorder_policy::none);
  for (uint64_t off = 0; off < t1.size(); ++off) {
    state_index s = state_at(t1.grid, off);
    assignment a;
    p1.layout.assign_state(s, a);
    a.set(bit_layout::var_bdd1, false);
    a.set(bit_layout::var_bdd0, false);
    for (uint32_t adv = 0; adv < 5; ++adv) {
      bool v1 = p1.m->eval(r1.roots[adv], a);
      bool v2 = p2.m->eval(r2.roots[adv], a);
      if (off == 37)
        CHECK(v1 != v2 ==
              (static_cast<advisory>(adv) == old_a || static_cast<advisory>(adv) == new_a));
      else
        CHECK(v1 == v2);
    }
  }
}

TEST_CASE("partition holds for any total table")
{
  std::mt19937_64 seeds(101);
  for (int round = 0; round < 5; ++round) {
    pipeline p({2, 3, 2, 3, 2, 2});
    advisory_table t = random_table(p.grid, advisory::wr, seeds());
    advisory_roots r = build_roots(*p.m, t, p.layout, 32, reorder_policy::none);
    partition_report rep = check_partition(*p.m, r, p.layout, coverage_mode::valid);
    CHECK(rep.ok());
    CHECK(rep.pairs.size() == 10);
    CHECK(r.partition_checked);
  }
}

TEST_CASE("a cube injected into a second root breaks exactly one pair with a witness")
{
  pipeline p({2, 3, 2, 3, 2, 2});
  advisory_table t = random_table(p.grid, advisory::coc, 77);
  state_index victim = state_at(p.grid, 11);
  advisory owner = t.at(11);
  advisory other = owner == advisory::wl ? advisory::wr : advisory::wl;
  advisory_roots r = build_roots(*p.m, t, p.layout, 32, reorder_policy::none);

  node_ref cube = state_to_cube(*p.m, p.layout, p.grid, victim);
  node_ref corrupted = p.m->apply_or(r.roots[static_cast<size_t>(other)], cube);
  p.m->deregister_root(r.roots[static_cast<size_t>(other)]);
  r.roots[static_cast<size_t>(other)] = corrupted;
  p.m->register_root(corrupted);

  partition_report rep = check_partition(*p.m, r, p.layout, coverage_mode::valid);
  CHECK_FALSE(rep.ok());
  CHECK(rep.covered); // coverage still holds, only disjointness broke
  CHECK_FALSE(r.partition_checked);
  int failing = 0;
  for (auto const& pc : rep.pairs) {
    if (pc.disjoint)
      continue;
    ++failing;
    bool hit = (pc.a == owner && pc.b == other) || (pc.a == other && pc.b == owner);
    CHECK(hit);
    REQUIRE(pc.witness.has_value());
    CHECK(*pc.witness == victim.i);
  }
  CHECK(failing == 1);
}

TEST_CASE("coverage over all bit patterns fails on grids with unused codes")
{
  pipeline p({3, 2, 2, 2, 2, 2}); // tau width 2 covers 4 codes, only 3 used
  advisory_table t = random_table(p.grid, advisory::sr, 9);
  advisory_roots r = build_roots(*p.m, t, p.layout, 32, reorder_policy::none);
  partition_report ok = check_partition(*p.m, r, p.layout, coverage_mode::valid);
  CHECK(ok.ok());
  partition_report all = check_partition(*p.m, r, p.layout, coverage_mode::all);
  CHECK_FALSE(all.covered);
  REQUIRE(all.coverage_witness.has_value());
  CHECK((*all.coverage_witness)[0] >= 3); // decodes outside the tau grid
}

TEST_CASE("eliminate_largest drops the biggest root and rebuilds it by complement")
{
  SECTION("constant-COC table eliminates COC")
  {
    pipeline p({2, 2, 2, 2, 2, 2});
    advisory_table t;
    t.grid = p.grid;
    t.a_prev = advisory::wl;
    t.entries.assign(p.grid.state_count(), 0);
    advisory_roots r = build_roots(*p.m, t, p.layout, 64, reorder_policy::none);
    CHECK_THROWS_AS(eliminate_largest(*p.m, r), error); // partition not verified yet
    check_partition(*p.m, r, p.layout, coverage_mode::valid);
    elimination e = eliminate_largest(*p.m, r);
    CHECK(e.eliminated == advisory::coc);
    CHECK(e.reconstructed == r.roots[0]);
  }

  SECTION("all-equal sizes tie-break to COC")
  {
    // advisory = tau index on a 5-value tau grid: five isomorphic roots
    pipeline p({5, 2, 2, 2, 2, 2});
    advisory_table t;
    t.grid = p.grid;
    t.a_prev = advisory::sr;
    t.entries.resize(p.grid.state_count());
    for (uint64_t off = 0; off < t.size(); ++off)
      t.entries[off] = static_cast<uint8_t>(state_at(p.grid, off)[dimension::tau]);
    advisory_roots r = build_roots(*p.m, t, p.layout, 64, reorder_policy::none);
    uint64_t size0 = p.m->node_count(r.roots[0]);
    for (uint32_t a = 1; a < 5; ++a)
      REQUIRE(p.m->node_count(r.roots[a]) == size0);
    check_partition(*p.m, r, p.layout, coverage_mode::valid);
    elimination e = eliminate_largest(*p.m, r);
    CHECK(e.eliminated == advisory::coc);
  }

  SECTION("reconstruction identity on random tables")
  {
    std::mt19937_64 seeds(2025);
    for (int round = 0; round < 5; ++round) {
      pipeline p({2, 3, 3, 2, 2, 2});
      advisory_table t = random_table(p.grid, advisory::sl, seeds());
      advisory_roots r = build_roots(*p.m, t, p.layout, 32, reorder_policy::none);
      check_partition(*p.m, r, p.layout, coverage_mode::valid);
      elimination e = eliminate_largest(*p.m, r);
      node_ref uni = p.m->bdd_false();
      for (auto kr : e.kept_roots)
        uni = p.m->apply_or(uni, kr);
      CHECK(p.m->apply_and(p.m->negate(uni), r.validity) ==
            r.roots[static_cast<size_t>(e.eliminated)]);
    }
  }
}

TEST_CASE("selector maps")
{
  SECTION("the SR-table convention matches the published patterns")
  {
    std::array<advisory, 4> kept{advisory::coc, advisory::wr, advisory::sl, advisory::sr};
    selector_map m = selector_map::default_for(advisory::sr, kept);
    CHECK(m.bits(advisory::coc) == std::pair<bool, bool>{true, true});
    CHECK(m.bits(advisory::sl) == std::pair<bool, bool>{false, true});
    CHECK(m.bits(advisory::wr) == std::pair<bool, bool>{true, false});
    CHECK(m.bits(advisory::sr) == std::pair<bool, bool>{false, false});
    CHECK_FALSE(m.has(advisory::wl));
  }
  SECTION("other tables assign patterns in enum order of the kept advisories")
  {
    std::array<advisory, 4> kept{advisory::coc, advisory::wl, advisory::sl, advisory::sr};
    selector_map m = selector_map::default_for(advisory::wl, kept);
    CHECK(m.bits(advisory::coc) == std::pair<bool, bool>{true, true});
    CHECK(m.bits(advisory::wl) == std::pair<bool, bool>{false, true});
    CHECK(m.bits(advisory::sl) == std::pair<bool, bool>{true, false});
    CHECK(m.bits(advisory::sr) == std::pair<bool, bool>{false, false});
  }
}

TEST_CASE("global assembly: selector cofactors return the kept roots id-exactly")
{
  // craft an SR table whose WL region is random noise: WL is the largest root
  pipeline p({4, 8, 8, 8, 4, 4});
  advisory_table t;
  t.grid = p.grid;
  t.a_prev = advisory::sr;
  t.entries.resize(p.grid.state_count());
  std::mt19937_64 rng(31337);
  for (uint64_t off = 0; off < t.size(); ++off) {
    if (rng() & 1) {
      t.entries[off] = static_cast<uint8_t>(advisory::wl);
    } else {
      state_index s = state_at(p.grid, off);
      t.entries[off] = static_cast<uint8_t>(
          s[dimension::rho] < 4 ? (s[dimension::theta] < 4 ? advisory::sl : advisory::sr)
                                : (s[dimension::theta] < 4 ? advisory::coc : advisory::wr));
    }
  }
  advisory_roots r = build_roots(*p.m, t, p.layout, 4096, reorder_policy::none);
  check_partition(*p.m, r, p.layout, coverage_mode::valid);
  elimination e = eliminate_largest(*p.m, r);
  REQUIRE(e.eliminated == advisory::wl);

  selector_map sel = selector_map::default_for(t.a_prev, e.kept);
  global_root g = assemble_global(*p.m, e, sel, t.a_prev);
  p.m->register_root(g.root);

  // published SR convention, and cofactoring recovers each kept root id-exact
  CHECK(sel.bits(advisory::coc) == std::pair<bool, bool>{true, true});
  for (advisory a : e.kept)
    CHECK(advisory_region(*p.m, g, a) == r.roots[static_cast<size_t>(a)]);

  // selector isolation survives sifting
  std::array<node_ref, 1> pins{g.root};
  reorder_report rep = sift(*p.m, pins);
  CHECK(rep.nodes_after <= rep.nodes_before);
  for (advisory a : e.kept)
    CHECK(advisory_region(*p.m, g, a) == r.roots[static_cast<size_t>(a)]);

  // classify agrees with the table exhaustively, after reordering
  for (uint64_t off = 0; off < t.size(); ++off) {
    state_index s = state_at(p.grid, off);
    REQUIRE(classify(*p.m, g, p.layout, p.grid, s) == t.at(off));
  }
}

TEST_CASE("assembling four FALSE roots yields the FALSE global")
{
  pipeline p({2, 2, 2, 2, 2, 2});
  elimination e;
  e.kept = {advisory::coc, advisory::wl, advisory::wr, advisory::sl};
  e.kept_roots = {p.m->bdd_false(), p.m->bdd_false(), p.m->bdd_false(), p.m->bdd_false()};
  e.eliminated = advisory::sr;
  selector_map sel = selector_map::default_for(advisory::coc, e.kept);
  global_root g = assemble_global(*p.m, e, sel, advisory::coc);
  CHECK(p.m->is_false(g.root));
  CHECK(classify(*p.m, g, p.layout, p.grid, state_index{}) == advisory::sr);
}

TEST_CASE("duplicate or missing selector patterns are rejected")
{
  pipeline p({2, 2, 2, 2, 2, 2});
  elimination e;
  e.kept = {advisory::coc, advisory::wl, advisory::wr, advisory::sl};
  e.kept_roots = {p.m->bdd_true(), p.m->bdd_false(), p.m->bdd_false(), p.m->bdd_false()};
  e.eliminated = advisory::sr;
  selector_map dup;
  dup.set(advisory::coc, true, true);
  dup.set(advisory::wl, true, true);
  dup.set(advisory::wr, true, false);
  dup.set(advisory::sl, false, false);
  CHECK_THROWS_AS(assemble_global(*p.m, e, dup, advisory::coc), error);
  selector_map missing;
  missing.set(advisory::coc, true, true);
  CHECK_THROWS_AS(assemble_global(*p.m, e, missing, advisory::coc), error);
}

TEST_CASE("full pipeline: classify reproduces the table, sift is transparent")
{
  std::mt19937_64 seeds(4242);
  for (int round = 0; round < 3; ++round) {
    pipeline p({2, 3, 3, 2, 2, 2});
    advisory_table t = generate_synthetic(p.grid, advisory::wr, seeds(), 0.02);
    compress_result res =
        compress_table(*p.m, t, p.layout, 64, reorder_policy::adaptive, coverage_mode::valid);
    REQUIRE(res.partition.ok());
    REQUIRE(res.global.has_value());
    for (auto const& rep : res.roots.reorder_reports)
      CHECK(rep.nodes_after <= rep.nodes_before);
    if (res.final_sift)
      CHECK(res.final_sift->nodes_after <= res.final_sift->nodes_before);
    for (uint64_t off = 0; off < t.size(); ++off) {
      state_index s = state_at(p.grid, off);
      REQUIRE(classify(*p.m, *res.global, p.layout, p.grid, s) == t.at(off));
    }
    p.m->check_invariants();
  }
}

TEST_CASE("classify rejects invalid states")
{
  pipeline p({2, 2, 2, 2, 2, 2});
  advisory_table t = random_table(p.grid, advisory::coc, 1);
  compress_result res = compress_table(*p.m, t, p.layout);
  state_index bad{};
  bad[dimension::psi] = 5;
  CHECK_THROWS_AS(classify(*p.m, *res.global, p.layout, p.grid, bad), error);
}
