#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bdd.hpp"
#include "reorder.hpp"
#include "state_codec.hpp"
#include "table_io.hpp"

namespace tablebdd {

/* ------------------------------------------------------------------ */
/* selector map                                                        */
/* ------------------------------------------------------------------ */

/*! \brief Assignment of (bdd1, bdd0) patterns to the four kept advisories;
 * the eliminated advisory has no pattern and is recovered by complement. */
struct selector_map {
  std::array<int8_t, 5> pattern{-1, -1, -1, -1, -1}; // bdd1<<1 | bdd0, or -1

  bool has(advisory a) const { return pattern[static_cast<size_t>(a)] >= 0; }

  void set(advisory a, bool bdd1, bool bdd0)
  {
    pattern[static_cast<size_t>(a)] =
        static_cast<int8_t>((bdd1 ? 2 : 0) | (bdd0 ? 1 : 0));
  }

  std::pair<bool, bool> bits(advisory a) const
  {
    int8_t p = pattern[static_cast<size_t>(a)];
    if (p < 0)
      throw error(errc::invalid_state,
                  std::string(to_string(a)) + " has no selector pattern");
    return {(p & 2) != 0, (p & 1) != 0};
  }

  friend bool operator==(selector_map const&, selector_map const&) = default;

  /*! \brief Default pattern assignment. The SR table keeps the published
   * convention (COC=11, SL=01, WR=10, SR=00) when its kept set matches;
   * otherwise patterns 11,01,10,00 go to the kept advisories in enum order. */
  static selector_map default_for(advisory a_prev, std::array<advisory, 4> const& kept)
  {
    selector_map m;
    if (a_prev == advisory::sr &&
        kept == std::array<advisory, 4>{advisory::coc, advisory::wr, advisory::sl, advisory::sr}) {
      m.set(advisory::coc, true, true);
      m.set(advisory::sl, false, true);
      m.set(advisory::wr, true, false);
      m.set(advisory::sr, false, false);
      return m;
    }
    constexpr std::array<std::pair<bool, bool>, 4> pats{
        {{true, true}, {false, true}, {true, false}, {false, false}}};
    for (size_t k = 0; k < 4; ++k)
      m.set(kept[k], pats[k].first, pats[k].second);
    return m;
  }
};

/* ------------------------------------------------------------------ */
/* results                                                             */
/* ------------------------------------------------------------------ */

/*! \brief One BDD root per advisory plus the domain-validity function and
 * build metadata. Roots and validity stay registered with the manager. */
struct advisory_roots {
  std::array<node_ref, 5> roots{};
  node_ref validity{};
  uint64_t chunks_processed = 0;
  std::vector<reorder_report> reorder_reports;
  bool partition_checked = false;
};

enum class coverage_mode { valid, all };

struct partition_report {
  struct pair_check {
    advisory a;
    advisory b;
    bool disjoint;
    std::optional<std::array<uint32_t, 6>> witness; // raw decoded indices
  };
  std::vector<pair_check> pairs;
  bool covered = false;
  std::optional<std::array<uint32_t, 6>> coverage_witness;
  coverage_mode mode = coverage_mode::valid;

  bool ok() const
  {
    if (!covered)
      return false;
    for (auto const& p : pairs)
      if (!p.disjoint)
        return false;
    return true;
  }
};

struct elimination {
  std::array<advisory, 4> kept{};
  std::array<node_ref, 4> kept_roots{};
  advisory eliminated = advisory::coc;
  node_ref reconstructed{}; // complement of the kept union within the domain
};

/*! \brief The assembled selector-guarded single-root diagram. */
struct global_root {
  node_ref root{};
  selector_map sel;
  advisory eliminated = advisory::coc;
  advisory a_prev = advisory::coc;
};

/* ------------------------------------------------------------------ */
/* chunked construction                                                */
/* ------------------------------------------------------------------ */

namespace detail {

/* Disjunction of the cubes of a chunk's states, one function per advisory.
 * The recursion follows the row-major dimension structure, so identical
 * subfunctions collapse in the ite cache instead of being re-merged cube by
 * cube; construction goes through ite and is valid under any variable order.
 */
class chunk_builder {
public:
  chunk_builder(bdd_manager& m, advisory_table const& t, bit_layout const& layout)
      : m_(m), t_(t), layout_(layout), cards_(t.grid.cardinalities())
  {
    stride_[5] = 1;
    for (size_t d = 5; d-- > 0;)
      stride_[d] = stride_[d + 1] * cards_[d + 1];
  }

  std::array<node_ref, 5> chunk_functions(uint64_t lo, uint64_t hi)
  {
    return build(0, 0, lo, hi);
  }

  /*! Forget memoized nodes; required after any collect() or reorder. */
  void invalidate() { mask_cache_.clear(); }

private:
  std::array<node_ref, 5> build(uint32_t d, uint64_t block_base, uint64_t lo, uint64_t hi)
  {
    if (d == 5)
      return leaf_masks(block_base, lo, hi);

    uint64_t const s = stride_[d];
    uint32_t const i_lo = static_cast<uint32_t>((lo - block_base) / s);
    uint32_t const i_hi = static_cast<uint32_t>((hi - 1 - block_base) / s);
    std::vector<std::array<node_ref, 5>> child(i_hi - i_lo + 1);
    for (uint32_t i = i_lo; i <= i_hi; ++i) {
      uint64_t b = block_base + i * s;
      child[i - i_lo] = build(d + 1, b, std::max(lo, b), std::min(hi, b + s));
    }
    std::array<node_ref, 5> out;
    for (uint32_t a = 0; a < 5; ++a) {
      out[a] = build_dimension_function(
          m_, layout_, static_cast<dimension>(d), [&](uint32_t pattern) {
            uint32_t idx = gray_decode(pattern);
            if (idx < i_lo || idx > i_hi || idx >= cards_[d])
              return m_.bdd_false();
            return child[idx - i_lo][a];
          });
    }
    return out;
  }

  std::array<node_ref, 5> leaf_masks(uint64_t block_base, uint64_t lo, uint64_t hi)
  {
    std::array<uint64_t, 5> mask{};
    uint32_t const w = layout_.width(dimension::v_int);
    for (uint64_t off = lo; off < hi; ++off) {
      uint32_t idx = static_cast<uint32_t>(off - block_base);
      mask[t_.entries[off]] |= 1ull << gray_encode(idx, w);
    }
    std::array<node_ref, 5> out;
    for (uint32_t a = 0; a < 5; ++a)
      out[a] = mask_function(mask[a]);
    return out;
  }

  node_ref mask_function(uint64_t mask)
  {
    if (mask == 0)
      return m_.bdd_false();
    auto it = mask_cache_.find(mask);
    if (it != mask_cache_.end())
      return it->second;
    node_ref f = build_dimension_function(m_, layout_, dimension::v_int, [&](uint32_t pattern) {
      return ((mask >> pattern) & 1ull) ? m_.bdd_true() : m_.bdd_false();
    });
    mask_cache_.emplace(mask, f);
    return f;
  }

  bdd_manager& m_;
  advisory_table const& t_;
  bit_layout const& layout_;
  std::array<uint32_t, 6> cards_;
  std::array<uint64_t, 6> stride_;
  std::unordered_map<uint64_t, node_ref> mask_cache_;
};

} // namespace detail

/*! \brief Build one root per advisory by chunked cube disjunction.
 *
 * For every state s, the root of t[s] evaluates true on s's bit pattern and
 * every other root evaluates false. Chunk functions are merged into the
 * advisory roots in ascending offset order; garbage is collected between
 * chunks and sifting runs per the policy (when the live node count doubles
 * since the last sift, and once after construction).
 */
inline advisory_roots build_roots(bdd_manager& m, advisory_table const& t,
                                  bit_layout const& layout,
                                  uint64_t chunk_size = default_chunk_size,
                                  reorder_policy policy = reorder_policy::adaptive)
{
  if (layout.widths != bit_layout::for_grid(t.grid).widths)
    throw error(errc::bad_grid, "bit layout does not match the table grid");
  if (layout.var_count() != m.var_count())
    throw error(errc::bad_grid, "manager capacity does not match the layout");
  if (m.frozen_count() < 2 || m.level_of(bit_layout::var_bdd1) != 0 ||
      m.level_of(bit_layout::var_bdd0) != 1)
    throw error(errc::invalid_state, "selector variables must be frozen at levels 0 and 1");
  if (chunk_size < 1)
    throw error(errc::invalid_state, "chunk size must be >= 1");

  advisory_roots r;
  r.validity = domain_validity(m, layout, t.grid);
  m.register_root(r.validity);
  for (auto& root : r.roots) {
    root = m.bdd_false();
    m.register_root(root);
  }

  detail::chunk_builder builder(m, t, layout);
  auto resift = [&](void) {
    std::array<node_ref, 6> pins{r.roots[0], r.roots[1], r.roots[2],
                                 r.roots[3], r.roots[4], r.validity};
    r.reorder_reports.push_back(sift(m, pins));
    builder.invalidate();
  };

  uint64_t baseline = 0;
  bool have_baseline = false;
  uint64_t const n = t.size();
  for (uint64_t lo = 0; lo < n; lo += chunk_size) {
    uint64_t hi = std::min(n, lo + chunk_size);
    auto fs = builder.chunk_functions(lo, hi);
    for (uint32_t a = 0; a < 5; ++a) {
      node_ref merged = m.apply_or(r.roots[a], fs[a]);
      m.deregister_root(r.roots[a]);
      r.roots[a] = merged;
      m.register_root(merged);
    }
    ++r.chunks_processed;
    m.collect();
    builder.invalidate();
    uint64_t live = m.stored_node_count();
    if (!have_baseline) {
      baseline = std::max<uint64_t>(1, live);
      have_baseline = true;
    }
    if (policy == reorder_policy::adaptive && live > 2 * baseline) {
      resift();
      baseline = std::max<uint64_t>(1, m.stored_node_count());
    }
  }
  if (policy != reorder_policy::none)
    resift();
  return r;
}

/* ------------------------------------------------------------------ */
/* partition check                                                     */
/* ------------------------------------------------------------------ */

/*! \brief Pairwise disjointness of the ten root pairs and coverage of the
 * selected domain; failures carry decoded witnesses, not errors. */
inline partition_report check_partition(bdd_manager& m, advisory_roots& r,
                                        bit_layout const& layout, coverage_mode mode)
{
  partition_report rep;
  rep.mode = mode;
  for (uint32_t a = 0; a < 5; ++a) {
    for (uint32_t b = a + 1; b < 5; ++b) {
      node_ref both = m.apply_and(r.roots[a], r.roots[b]);
      partition_report::pair_check pc{static_cast<advisory>(a), static_cast<advisory>(b),
                                      m.is_false(both), std::nullopt};
      if (!pc.disjoint)
        pc.witness = layout.decode_state_bits(*m.pick_sat(both));
      rep.pairs.push_back(pc);
    }
  }
  node_ref all = m.bdd_false();
  for (auto root : r.roots)
    all = m.apply_or(all, root);
  node_ref uncovered = mode == coverage_mode::valid
                           ? m.apply_and(r.validity, m.negate(all))
                           : m.negate(all);
  rep.covered = m.is_false(uncovered);
  if (!rep.covered)
    rep.coverage_witness = layout.decode_state_bits(*m.pick_sat(uncovered));
  r.partition_checked = rep.ok();
  return rep;
}

/* ------------------------------------------------------------------ */
/* largest-root elimination                                            */
/* ------------------------------------------------------------------ */

/*! \brief Drop the advisory with the largest root (ties: enum order). The
 * reconstruction identity — the complement of the kept union within the
 * valid domain is id-identical to the dropped root — is checked here. */
inline elimination eliminate_largest(bdd_manager& m, advisory_roots const& r)
{
  if (!r.partition_checked)
    throw error(errc::partition_unverified, "run check_partition first");
  uint32_t largest = 0;
  uint64_t best = m.node_count(r.roots[0]);
  for (uint32_t a = 1; a < 5; ++a) {
    uint64_t s = m.node_count(r.roots[a]);
    if (s > best) {
      best = s;
      largest = a;
    }
  }
  elimination e;
  e.eliminated = static_cast<advisory>(largest);
  size_t k = 0;
  node_ref kept_union = m.bdd_false();
  for (uint32_t a = 0; a < 5; ++a) {
    if (a == largest)
      continue;
    e.kept[k] = static_cast<advisory>(a);
    e.kept_roots[k] = r.roots[a];
    kept_union = m.apply_or(kept_union, r.roots[a]);
    ++k;
  }
  e.reconstructed = m.apply_and(m.negate(kept_union), r.validity);
  if (!(e.reconstructed == r.roots[largest]))
    throw std::logic_error("complement reconstruction does not match the eliminated root");
  return e;
}

/* ------------------------------------------------------------------ */
/* global assembly and classification                                  */
/* ------------------------------------------------------------------ */

/*! \brief global = OR over kept advisories of (selector cube AND root).
 * Cofactoring on a selector pattern returns the advisory's root, id-exact. */
inline global_root assemble_global(bdd_manager& m, elimination const& e,
                                   selector_map const& sel, advisory a_prev)
{
  if (m.frozen_count() < 2 || m.level_of(bit_layout::var_bdd1) != 0 ||
      m.level_of(bit_layout::var_bdd0) != 1)
    throw error(errc::invalid_state, "selector variables must be frozen at levels 0 and 1");
  uint32_t seen = 0;
  for (advisory a : e.kept) {
    if (!sel.has(a))
      throw error(errc::duplicate_selector,
                  "kept advisory " + std::string(to_string(a)) + " lacks a selector pattern");
    auto [b1, b0] = sel.bits(a);
    uint32_t bit = 1u << ((b1 ? 2 : 0) | (b0 ? 1 : 0));
    if (seen & bit)
      throw error(errc::duplicate_selector, "selector pattern assigned twice");
    seen |= bit;
  }
  if (sel.has(e.eliminated))
    throw error(errc::duplicate_selector, "eliminated advisory must not carry a pattern");

  node_ref global = m.bdd_false();
  for (size_t k = 0; k < 4; ++k) {
    auto [b1, b0] = sel.bits(e.kept[k]);
    std::array<std::pair<uint32_t, bool>, 2> lits{
        {{bit_layout::var_bdd1, b1}, {bit_layout::var_bdd0, b0}}};
    node_ref guard = m.mk_cube(lits);
    global = m.apply_or(global, m.apply_and(guard, e.kept_roots[k]));
  }
  return global_root{global, sel, e.eliminated, a_prev};
}

/*! \brief Kept-advisory region extracted from the global diagram by
 * cofactoring on the advisory's selector pattern. */
inline node_ref advisory_region(bdd_manager& m, global_root const& g, advisory a)
{
  auto [b1, b0] = g.sel.bits(a);
  return m.cofactor(m.cofactor(g.root, bit_layout::var_bdd1, b1), bit_layout::var_bdd0, b0);
}

/*! \brief Advisory issued for a state: the kept advisories' predicates are
 * evaluated in order and the first hit wins; if none holds the eliminated
 * advisory is returned. Roots are disjoint, so the order cannot change the
 * result. */
inline advisory classify(bdd_manager& m, global_root const& g, bit_layout const& layout,
                         quantization_grid const& grid, state_index const& s)
{
  validate_state(grid, s);
  assignment a;
  layout.assign_state(s, a);
  for (uint32_t cand = 0; cand < 5; ++cand) {
    advisory adv = static_cast<advisory>(cand);
    if (!g.sel.has(adv))
      continue;
    auto [b1, b0] = g.sel.bits(adv);
    a.set(bit_layout::var_bdd1, b1);
    a.set(bit_layout::var_bdd0, b0);
    if (m.eval(g.root, a))
      return adv;
  }
  return g.eliminated;
}

/* ------------------------------------------------------------------ */
/* one-shot pipeline                                                   */
/* ------------------------------------------------------------------ */

struct compress_result {
  advisory_roots roots;
  partition_report partition;
  std::optional<global_root> global; // absent when the partition check failed
  std::array<uint64_t, 5> root_node_counts{};
  uint64_t global_node_count = 0;
  std::optional<reorder_report> final_sift;
};

/*! \brief Full pipeline: build roots, prove the partition, eliminate the
 * largest root, assemble the selector-guarded diagram, sift. The manager
 * must be fresh with the layout's capacity; selectors are frozen here. */
inline compress_result compress_table(bdd_manager& m, advisory_table const& t,
                                      bit_layout const& layout,
                                      uint64_t chunk_size = default_chunk_size,
                                      reorder_policy policy = reorder_policy::adaptive,
                                      coverage_mode mode = coverage_mode::valid)
{
  if (m.frozen_count() < 2) {
    std::array<uint32_t, 2> sel{bit_layout::var_bdd1, bit_layout::var_bdd0};
    m.freeze(sel);
  }
  compress_result res;
  res.roots = build_roots(m, t, layout, chunk_size, policy);
  res.partition = check_partition(m, res.roots, layout, mode);
  for (uint32_t a = 0; a < 5; ++a)
    res.root_node_counts[a] = m.node_count(res.roots.roots[a]);
  if (!res.partition.ok())
    return res;

  elimination e = eliminate_largest(m, res.roots);
  selector_map sel = selector_map::default_for(t.a_prev, e.kept);
  global_root g = assemble_global(m, e, sel, t.a_prev);
  m.register_root(g.root);
  if (policy != reorder_policy::none) {
    std::array<node_ref, 1> pins{g.root};
    res.final_sift = sift(m, pins);
  }
  res.global = g;
  res.global_node_count = m.node_count(g.root);
  return res;
}

} // namespace tablebdd
