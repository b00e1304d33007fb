#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bdd.hpp"

namespace tablebdd {

/*! \brief Outcome of one sift() run. Sizes count internal nodes reachable
 * from the registered roots; sifting only ever accepts non-worsening final
 * positions, so nodes_after <= nodes_before. */
struct reorder_report {
  uint64_t nodes_before = 0;
  uint64_t nodes_after = 0;
  std::vector<uint32_t> order_before;
  std::vector<uint32_t> order_after;
  uint64_t swaps_performed = 0;
};

/*! \brief When the table compressor invokes sifting. `adaptive` sifts once
 * the live node count doubles since the last sift, plus once at the end;
 * `final_only` sifts only at the end. */
enum class reorder_policy { none, final_only, adaptive };

inline void swap_adjacent(bdd_manager& m, uint32_t level) { m.swap_adjacent(level); }

inline void freeze(bdd_manager& m, std::span<const uint32_t> vars) { m.freeze(vars); }

namespace detail {

/* Move variable v through every unfrozen position and park it at the
 * smallest-size one (ties: topmost level). Session must be open. */
inline uint64_t sift_one(bdd_manager& m, uint32_t v)
{
  uint32_t const top = m.frozen_count();
  uint32_t const bottom = m.var_count() - 1;
  uint32_t cur = m.level_of(v);
  std::vector<uint64_t> size_at(m.var_count(), 0);
  size_at[cur] = m.stored_node_count();
  while (cur > top) {
    m.swap_adjacent(cur - 1);
    --cur;
    size_at[cur] = m.stored_node_count();
  }
  while (cur < bottom) {
    m.swap_adjacent(cur);
    ++cur;
    size_at[cur] = m.stored_node_count();
  }
  uint32_t best = top;
  for (uint32_t l = top; l <= bottom; ++l)
    if (size_at[l] < size_at[best])
      best = l;
  while (cur > best) {
    m.swap_adjacent(cur - 1);
    --cur;
  }
  return size_at[best];
}

} // namespace detail

/*! \brief Classic single-variable sifting over all unfrozen variables.
 *
 * Each variable is moved through all unfrozen positions and parked at its
 * best one (ties: lowest level). Variables are processed in decreasing order
 * of level population, ties by variable id. Functions of all registered
 * roots are preserved and their handles stay valid.
 */
inline reorder_report sift(bdd_manager& m, std::span<const node_ref> roots)
{
  for (auto r : roots)
    m.register_root(r);

  reorder_report rep;
  uint64_t const swaps0 = m.swaps_done();
  m.begin_reorder();
  rep.nodes_before = m.stored_node_count();
  rep.order_before = m.current_order();

  uint32_t const fro = m.frozen_count();
  if (m.var_count() >= fro + 2) {
    std::vector<uint32_t> vars;
    for (uint32_t l = fro; l < m.var_count(); ++l)
      vars.push_back(m.var_at_level(l));
    std::vector<uint64_t> pop(m.var_count(), 0);
    for (uint32_t v : vars)
      pop[v] = m.level_population(m.level_of(v));
    std::sort(vars.begin(), vars.end(), [&](uint32_t a, uint32_t b) {
      if (pop[a] != pop[b])
        return pop[a] > pop[b];
      return a < b;
    });
    for (uint32_t v : vars)
      detail::sift_one(m, v);
  }

  rep.nodes_after = m.stored_node_count();
  rep.order_after = m.current_order();
  rep.swaps_performed = m.swaps_done() - swaps0;
  m.end_reorder();

  for (auto r : roots)
    m.deregister_root(r);
  return rep;
}

} // namespace tablebdd
