#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace tablebdd {

/*! \brief Handle to a Boolean function held by a bdd_manager.
 *
 * Within one manager two handles denote the same function iff they compare
 * equal (canonicality). The manager tag guards against mixing handles from
 * different managers.
 */
struct node_ref {
  uint32_t id = 0;
  uint32_t mgr = 0;

  friend bool operator==(node_ref a, node_ref b) = default;
};

/*! \brief Total or partial assignment over variables 0..n-1 (n <= 62). */
struct assignment {
  uint64_t values = 0;
  uint64_t defined = 0;

  static assignment all_false(uint32_t n)
  {
    assignment a;
    a.defined = (n >= 64) ? ~0ull : ((1ull << n) - 1);
    return a;
  }

  void set(uint32_t var, bool val)
  {
    defined |= 1ull << var;
    if (val)
      values |= 1ull << var;
    else
      values &= ~(1ull << var);
  }

  bool has(uint32_t var) const { return (defined >> var) & 1ull; }
  bool get(uint32_t var) const { return (values >> var) & 1ull; }
};

namespace detail {

inline uint64_t mix64(uint64_t x)
{
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

/* Open-addressing cache: u64 key -> u32 value, linear probing, lossless. */
struct flat_cache {
  static constexpr uint64_t empty_key = ~0ull;

  std::vector<uint64_t> keys;
  std::vector<uint32_t> vals;
  size_t count = 0;

  flat_cache() { reset(1024); }

  void reset(size_t cap)
  {
    keys.assign(cap, empty_key);
    vals.assign(cap, 0);
    count = 0;
  }

  void clear()
  {
    if (count == 0)
      return;
    // shrink oversized tables back when cleared between build phases
    size_t cap = keys.size() > (1u << 22) ? (1u << 20) : keys.size();
    reset(cap);
  }

  std::optional<uint32_t> find(uint64_t key) const
  {
    size_t mask = keys.size() - 1;
    size_t i = mix64(key) & mask;
    while (keys[i] != empty_key) {
      if (keys[i] == key)
        return vals[i];
      i = (i + 1) & mask;
    }
    return std::nullopt;
  }

  void insert(uint64_t key, uint32_t val)
  {
    if ((count + 1) * 10 >= keys.size() * 7)
      grow();
    size_t mask = keys.size() - 1;
    size_t i = mix64(key) & mask;
    while (keys[i] != empty_key) {
      if (keys[i] == key) {
        vals[i] = val;
        return;
      }
      i = (i + 1) & mask;
    }
    keys[i] = key;
    vals[i] = val;
    ++count;
  }

  void grow()
  {
    std::vector<uint64_t> ok = std::move(keys);
    std::vector<uint32_t> ov = std::move(vals);
    reset(ok.size() * 2);
    size_t mask = keys.size() - 1;
    for (size_t j = 0; j < ok.size(); ++j) {
      if (ok[j] == empty_key)
        continue;
      size_t i = mix64(ok[j]) & mask;
      while (keys[i] != empty_key)
        i = (i + 1) & mask;
      keys[i] = ok[j];
      vals[i] = ov[j];
      ++count;
    }
  }
};

/* Same scheme with a 128-bit key, used by the ternary ite cache. */
struct flat_cache2 {
  static constexpr uint64_t empty_key = ~0ull;

  std::vector<uint64_t> ka, kb;
  std::vector<uint32_t> vals;
  size_t count = 0;

  flat_cache2() { reset(1024); }

  void reset(size_t cap)
  {
    ka.assign(cap, empty_key);
    kb.assign(cap, 0);
    vals.assign(cap, 0);
    count = 0;
  }

  void clear()
  {
    if (count == 0)
      return;
    size_t cap = ka.size() > (1u << 22) ? (1u << 20) : ka.size();
    reset(cap);
  }

  std::optional<uint32_t> find(uint64_t a, uint64_t b) const
  {
    size_t mask = ka.size() - 1;
    size_t i = mix64(a ^ mix64(b)) & mask;
    while (ka[i] != empty_key) {
      if (ka[i] == a && kb[i] == b)
        return vals[i];
      i = (i + 1) & mask;
    }
    return std::nullopt;
  }

  void insert(uint64_t a, uint64_t b, uint32_t val)
  {
    if ((count + 1) * 10 >= ka.size() * 7)
      grow();
    size_t mask = ka.size() - 1;
    size_t i = mix64(a ^ mix64(b)) & mask;
    while (ka[i] != empty_key) {
      if (ka[i] == a && kb[i] == b) {
        vals[i] = val;
        return;
      }
      i = (i + 1) & mask;
    }
    ka[i] = a;
    kb[i] = b;
    vals[i] = val;
    ++count;
  }

  void grow()
  {
    std::vector<uint64_t> oa = std::move(ka), ob = std::move(kb);
    std::vector<uint32_t> ov = std::move(vals);
    reset(oa.size() * 2);
    size_t mask = ka.size() - 1;
    for (size_t j = 0; j < oa.size(); ++j) {
      if (oa[j] == empty_key)
        continue;
      size_t i = mix64(oa[j] ^ mix64(ob[j])) & mask;
      while (ka[i] != empty_key)
        i = (i + 1) & mask;
      ka[i] = oa[j];
      kb[i] = ob[j];
      vals[i] = ov[j];
      ++count;
    }
  }
};

} // namespace detail

struct manager_stats {
  uint64_t stored_nodes = 0;   ///< live internal nodes currently stored
  uint64_t created_nodes = 0;  ///< total node creations since construction
  uint64_t cache_lookups = 0;
  uint64_t cache_hits = 0;
};

/*! \brief Canonical ROBDD manager: hash-consed node store, memoized Boolean
 * operations, and in-place adjacent-level swapping for reordering.
 *
 * Plain ROBDD with explicit TRUE/FALSE terminals (ids 1 and 0), no complement
 * edges. Levels run from 0 (topmost) downward; children always sit at
 * strictly greater levels. The variable order is a bijection between variable
 * ids (fixed at creation) and levels. Nodes unreferenced from registered
 * roots are reclaimed only by an explicit collect() call.
 *
 * Mutating operations require exclusive access; eval() on a diagram that is
 * no longer being constructed is safe from many threads.
 */
class bdd_manager {
public:
  static constexpr uint32_t max_node_id = (1u << 30) - 1;
  static constexpr uint32_t terminal_level = 0xFFFFFFFFu;
  static constexpr uint32_t freed_level = 0xFFFFFFFEu;

  explicit bdd_manager(uint32_t num_vars, bool enable_cache = true)
      : cache_enabled_(enable_cache)
  {
    if (num_vars > 62)
      throw error(errc::undeclared_variable, "variable capacity limited to 62");
    static uint32_t next_serial = 1;
    serial_ = next_serial++;
    nvars_ = num_vars;
    nodes_.resize(2);
    nodes_[0] = {terminal_level, 0, 0};
    nodes_[1] = {terminal_level, 1, 1};
    var2level_.resize(num_vars);
    level2var_.resize(num_vars);
    for (uint32_t i = 0; i < num_vars; ++i)
      var2level_[i] = level2var_[i] = i;
    levels_.resize(num_vars);
    for (auto& t : levels_)
      t.slots.assign(16, empty_slot);
  }

  bdd_manager(bdd_manager const&) = delete;
  bdd_manager& operator=(bdd_manager const&) = delete;

  uint32_t var_count() const { return nvars_; }
  uint32_t serial() const { return serial_; }

  node_ref bdd_false() const { return {0, serial_}; }
  node_ref bdd_true() const { return {1, serial_}; }

  bool is_false(node_ref f) const { return check(f) == 0; }
  bool is_true(node_ref f) const { return check(f) == 1; }

  /* ------------------------------------------------------------------ */
  /* construction                                                        */
  /* ------------------------------------------------------------------ */

  /*! \brief Function "variable v is true". Canonical: repeated calls return
   * the same handle. */
  node_ref mk_var(uint32_t v) { return mk_literal(v, true); }

  node_ref mk_literal(uint32_t v, bool positive)
  {
    if (v >= nvars_)
      throw error(errc::undeclared_variable, "variable " + std::to_string(v));
    uint32_t id = positive ? mk_node(var2level_[v], 1, 0) : mk_node(var2level_[v], 0, 1);
    return {id, serial_};
  }

  /*! \brief Conjunction of literals, built as a chain in the current order.
   * Variables must be distinct. */
  node_ref mk_cube(std::span<const std::pair<uint32_t, bool>> literals)
  {
    std::vector<std::pair<uint32_t, bool>> by_level; // (level, positive)
    by_level.reserve(literals.size());
    for (auto [v, pos] : literals) {
      if (v >= nvars_)
        throw error(errc::undeclared_variable, "variable " + std::to_string(v));
      by_level.emplace_back(var2level_[v], pos);
    }
    std::sort(by_level.begin(), by_level.end(),
              [](auto const& a, auto const& b) { return a.first > b.first; });
    uint32_t acc = 1;
    uint32_t prev_level = terminal_level;
    for (auto [lvl, pos] : by_level) {
      if (lvl == prev_level)
        throw error(errc::invalid_state, "duplicate variable in cube");
      prev_level = lvl;
      acc = pos ? mk_node(lvl, acc, 0) : mk_node(lvl, 0, acc);
    }
    return {acc, serial_};
  }

  /* ------------------------------------------------------------------ */
  /* Boolean operations (memoized, canonical results)                    */
  /* ------------------------------------------------------------------ */

  node_ref apply_and(node_ref f, node_ref g) { return {and_rec(check(f), check(g)), serial_}; }
  node_ref apply_or(node_ref f, node_ref g) { return {or_rec(check(f), check(g)), serial_}; }
  node_ref apply_xor(node_ref f, node_ref g) { return {xor_rec(check(f), check(g)), serial_}; }
  node_ref negate(node_ref f) { return {not_rec(check(f)), serial_}; }

  node_ref ite(node_ref f, node_ref g, node_ref h)
  {
    return {ite_rec(check(f), check(g), check(h)), serial_};
  }

  /*! \brief Cofactor f|v=value; the result never tests v. */
  node_ref cofactor(node_ref f, uint32_t v, bool value)
  {
    if (v >= nvars_)
      throw error(errc::undeclared_variable, "variable " + std::to_string(v));
    return {cofactor_rec(check(f), var2level_[v], v, value), serial_};
  }

  /* ------------------------------------------------------------------ */
  /* queries (pure, no node allocation)                                  */
  /* ------------------------------------------------------------------ */

  /*! \brief Truth value of f under the assignment; every variable on the
   * traversed path must be defined. */
  bool eval(node_ref f, assignment const& a) const
  {
    uint32_t id = check(f);
    while (id > 1) {
      node const& n = nodes_[id];
      uint32_t v = level2var_[n.level];
      if (!a.has(v))
        throw error(errc::missing_assignment, "variable " + std::to_string(v) + " on path");
      id = a.get(v) ? n.hi : n.lo;
    }
    return id == 1;
  }

  /*! \brief Number of satisfying assignments over exactly n_vars variables.
   *
   * Computed over the manager's variables and rescaled; rescaling below the
   * capacity requires the function to be independent of the excluded
   * variables (the division is checked exact).
   */
  uint64_t sat_count(node_ref f, uint32_t n_vars) const
  {
    if (n_vars > 63)
      throw error(errc::index_out_of_range, "sat_count capped at 63 variables");
    std::unordered_map<uint32_t, uint64_t> memo;
    uint32_t id = check(f);
    uint32_t root_level = id <= 1 ? nvars_ : nodes_[id].level;
    uint64_t base = count_rec(id, memo) << root_level; // over nvars_ variables
    uint64_t scaled = base;
    if (n_vars >= nvars_) {
      uint32_t up = n_vars - nvars_;
      if (up > 0 && base > (~0ull >> up))
        throw error(errc::index_out_of_range, "sat_count overflow");
      scaled = base << up;
    } else {
      uint32_t down = nvars_ - n_vars;
      if (base & ((1ull << down) - 1))
        throw error(errc::index_out_of_range,
                    "sat_count: function depends on excluded variables");
      scaled = base >> down;
    }
    return scaled;
  }

  /*! \brief One satisfying assignment, deterministic: the then-branch is
   * preferred at each node, unconstrained variables are false. Empty for the
   * constant FALSE. */
  std::optional<assignment> pick_sat(node_ref f) const
  {
    uint32_t id = check(f);
    if (id == 0)
      return std::nullopt;
    assignment a = assignment::all_false(nvars_);
    while (id > 1) {
      node const& n = nodes_[id];
      uint32_t v = level2var_[n.level];
      if (n.hi != 0) {
        a.set(v, true);
        id = n.hi;
      } else {
        id = n.lo;
      }
    }
    return a;
  }

  /*! \brief Distinct internal nodes reachable from f (constants excluded). */
  uint64_t node_count(node_ref f) const
  {
    uint32_t id = check(f);
    if (id <= 1)
      return 0;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<uint32_t> stack{id};
    seen[0] = seen[1] = true;
    uint64_t n = 0;
    while (!stack.empty()) {
      uint32_t cur = stack.back();
      stack.pop_back();
      if (seen[cur])
        continue;
      seen[cur] = true;
      ++n;
      stack.push_back(nodes_[cur].hi);
      stack.push_back(nodes_[cur].lo);
    }
    return n;
  }

  /*! \brief Internal nodes reachable from any of the given roots. */
  uint64_t node_count(std::span<const node_ref> roots) const
  {
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<uint32_t> stack;
    for (auto r : roots)
      stack.push_back(check(r));
    seen[0] = seen[1] = true;
    uint64_t n = 0;
    while (!stack.empty()) {
      uint32_t cur = stack.back();
      stack.pop_back();
      if (seen[cur])
        continue;
      seen[cur] = true;
      ++n;
      stack.push_back(nodes_[cur].hi);
      stack.push_back(nodes_[cur].lo);
    }
    return n;
  }

  /* ------------------------------------------------------------------ */
  /* roots, garbage collection, caches                                   */
  /* ------------------------------------------------------------------ */

  void register_root(node_ref f) { ++roots_[check(f)]; }

  void deregister_root(node_ref f)
  {
    auto it = roots_.find(check(f));
    if (it == roots_.end())
      return;
    if (--it->second == 0)
      roots_.erase(it);
  }

  /*! \brief Reclaim every node unreachable from the registered roots.
   * Invalidates unregistered handles. Returns the number of freed nodes. */
  uint64_t collect()
  {
    clear_caches();
    std::vector<bool> mark(nodes_.size(), false);
    mark[0] = mark[1] = true;
    std::vector<uint32_t> stack;
    for (auto& [id, cnt] : roots_)
      stack.push_back(id);
    while (!stack.empty()) {
      uint32_t cur = stack.back();
      stack.pop_back();
      if (mark[cur])
        continue;
      mark[cur] = true;
      stack.push_back(nodes_[cur].hi);
      stack.push_back(nodes_[cur].lo);
    }
    uint64_t freed = 0;
    for (auto& t : levels_) {
      t.slots.assign(std::max<size_t>(16, t.slots.size()), empty_slot);
      t.count = 0;
    }
    for (uint32_t id = 2; id < nodes_.size(); ++id) {
      if (nodes_[id].level == freed_level)
        continue;
      if (!mark[id]) {
        nodes_[id].level = freed_level;
        free_.push_back(id);
        ++freed;
        --stored_;
      } else {
        unique_insert(nodes_[id].level, id);
      }
    }
    return freed;
  }

  void clear_caches()
  {
    cache_.clear();
    ite_cache_.clear();
  }

  manager_stats stats() const
  {
    manager_stats s;
    s.stored_nodes = stored_;
    s.created_nodes = created_;
    s.cache_lookups = cache_lookups_;
    s.cache_hits = cache_hits_;
    return s;
  }

  uint64_t stored_node_count() const { return stored_; }

  /* ------------------------------------------------------------------ */
  /* variable order                                                      */
  /* ------------------------------------------------------------------ */

  uint32_t level_of(uint32_t var) const
  {
    if (var >= nvars_)
      throw error(errc::undeclared_variable, "variable " + std::to_string(var));
    return var2level_[var];
  }

  uint32_t var_at_level(uint32_t level) const
  {
    if (level >= nvars_)
      throw error(errc::index_out_of_range, "level " + std::to_string(level));
    return level2var_[level];
  }

  /*! \brief Variable ids by level, topmost first. */
  std::vector<uint32_t> current_order() const { return level2var_; }

  /*! \brief Install a whole order (only while the manager holds no nodes). */
  void set_order(std::span<const uint32_t> vars_top_down)
  {
    if (stored_ != 0)
      throw error(errc::invalid_state, "set_order requires an empty manager");
    if (vars_top_down.size() != nvars_)
      throw error(errc::invalid_state, "order size mismatch");
    std::vector<bool> seen(nvars_, false);
    for (auto v : vars_top_down) {
      if (v >= nvars_ || seen[v])
        throw error(errc::invalid_state, "order is not a permutation");
      seen[v] = true;
    }
    for (uint32_t l = 0; l < nvars_; ++l) {
      level2var_[l] = vars_top_down[l];
      var2level_[vars_top_down[l]] = l;
    }
  }

  uint32_t frozen_count() const { return frozen_; }

  /*! \brief Pin the listed variables at the top of the order; reordering will
   * never move them. They must already occupy the topmost levels. */
  void freeze(std::span<const uint32_t> vars)
  {
    if (vars.empty())
      return;
    std::vector<bool> hit(vars.size(), false);
    for (auto v : vars) {
      if (v >= nvars_)
        throw error(errc::undeclared_variable, "variable " + std::to_string(v));
      uint32_t l = var2level_[v];
      if (l >= vars.size() || hit[l])
        throw error(errc::frozen_level,
                    "frozen variables must occupy the topmost levels (rotate first)");
      hit[l] = true;
    }
    frozen_ = std::max<uint32_t>(frozen_, static_cast<uint32_t>(vars.size()));
  }

  /*! \brief Exchange the variables at `level` and `level+1`. Registered roots
   * keep their ids and denote the same functions. */
  void swap_adjacent(uint32_t level)
  {
    if (level + 1 >= nvars_)
      throw error(errc::index_out_of_range, "swap level " + std::to_string(level));
    if (level < frozen_)
      throw error(errc::frozen_level, "level " + std::to_string(level) + " is frozen");
    bool own = !in_reorder_;
    if (own)
      begin_reorder();
    swap_levels(level);
    if (own)
      end_reorder();
  }

  /* Reordering sessions: collect garbage once, maintain reference counts
   * across a run of swaps. Used by sift(); swap_adjacent opens a transient
   * session when called standalone. */
  void begin_reorder()
  {
    if (in_reorder_)
      throw error(errc::invalid_state, "reorder session already open");
    collect();
    rc_.assign(nodes_.size(), 0);
    rc_[0] = rc_[1] = 1; // terminals pinned
    for (uint32_t id = 2; id < nodes_.size(); ++id) {
      if (nodes_[id].level == freed_level)
        continue;
      ++rc_[nodes_[id].hi];
      ++rc_[nodes_[id].lo];
    }
    for (auto& [id, cnt] : roots_)
      rc_[id] += cnt;
    in_reorder_ = true;
  }

  void end_reorder()
  {
    rc_.clear();
    rc_.shrink_to_fit();
    in_reorder_ = false;
    clear_caches();
  }

  bool in_reorder() const { return in_reorder_; }

  /*! \brief Node ids stored at a level (snapshot). */
  uint64_t level_population(uint32_t level) const { return levels_[level].count; }

  /* ------------------------------------------------------------------ */
  /* traversal                                                           */
  /* ------------------------------------------------------------------ */

  struct node_view {
    uint32_t id;
    uint32_t level;
    uint32_t hi;
    uint32_t lo;
  };

  node_view view(node_ref f) const
  {
    uint32_t id = check(f);
    return {id, nodes_[id].level, nodes_[id].hi, nodes_[id].lo};
  }

  node_view view_id(uint32_t id) const { return {id, nodes_[id].level, nodes_[id].hi, nodes_[id].lo}; }

  /*! \brief Internal nodes reachable from f in deterministic post-order
   * (children before parents, then-branch explored first). */
  std::vector<uint32_t> topo_order(node_ref f) const
  {
    std::vector<uint32_t> out;
    uint32_t root = check(f);
    if (root <= 1)
      return out;
    std::vector<bool> seen(nodes_.size(), false);
    seen[0] = seen[1] = true;
    // iterative post-order: (node, expanded?)
    std::vector<std::pair<uint32_t, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [cur, expanded] = stack.back();
      stack.pop_back();
      if (seen[cur] && !expanded)
        continue;
      if (expanded) {
        out.push_back(cur);
        continue;
      }
      seen[cur] = true;
      stack.emplace_back(cur, true);
      // push lo first so hi is visited first
      if (!seen[nodes_[cur].lo])
        stack.emplace_back(nodes_[cur].lo, false);
      if (!seen[nodes_[cur].hi])
        stack.emplace_back(nodes_[cur].hi, false);
    }
    return out;
  }

  /* ------------------------------------------------------------------ */
  /* invariants (test support)                                           */
  /* ------------------------------------------------------------------ */

  /*! \brief Structural self-check: canonical storage, reduction, level order.
   * Throws std::logic_error on violation. */
  void check_invariants() const
  {
    std::vector<bool> tabled(nodes_.size(), false);
    uint64_t tabled_count = 0;
    for (uint32_t lvl = 0; lvl < nvars_; ++lvl) {
      for (uint32_t slot : levels_[lvl].slots) {
        if (slot == empty_slot)
          continue;
        node const& n = nodes_[slot];
        if (n.level != lvl)
          throw std::logic_error("node tabled at wrong level");
        if (n.hi == n.lo)
          throw std::logic_error("redundant node (equal children)");
        if (nodes_[n.hi].level == freed_level || nodes_[n.lo].level == freed_level)
          throw std::logic_error("child is freed");
        if (!(nodes_[n.hi].level > lvl) || !(nodes_[n.lo].level > lvl))
          throw std::logic_error("child level not below parent");
        if (tabled[slot])
          throw std::logic_error("node tabled twice");
        if (unique_find(lvl, n.hi, n.lo) != slot)
          throw std::logic_error("duplicate (level,hi,lo) triple");
        tabled[slot] = true;
        ++tabled_count;
      }
    }
    for (uint32_t id = 2; id < nodes_.size(); ++id)
      if (nodes_[id].level != freed_level && !tabled[id])
        throw std::logic_error("stored node missing from unique table");
    if (tabled_count != stored_)
      throw std::logic_error("stored-node accounting mismatch");
    for (uint32_t v = 0; v < nvars_; ++v)
      if (level2var_[var2level_[v]] != v)
        throw std::logic_error("variable order not a bijection");
  }

  bool cache_enabled() const { return cache_enabled_; }

private:
  struct node {
    uint32_t level;
    uint32_t hi;
    uint32_t lo;
  };

  struct level_table {
    std::vector<uint32_t> slots;
    uint64_t count = 0;
  };

  static constexpr uint32_t empty_slot = 0xFFFFFFFFu;

  enum op : uint64_t { op_and = 1, op_or = 2, op_xor = 3, op_not = 4, op_cof0 = 5, op_cof1 = 6 };

  uint32_t check(node_ref f) const
  {
    if (f.mgr != serial_)
      throw error(errc::cross_manager, "operand belongs to another manager");
    return f.id;
  }

  static uint64_t key2(op o, uint32_t a, uint32_t b)
  {
    return (static_cast<uint64_t>(o) << 60) | (static_cast<uint64_t>(a) << 30) | b;
  }

  /* ---- unique table ---- */

  uint64_t triple_hash(uint32_t hi, uint32_t lo) const
  {
    return detail::mix64((static_cast<uint64_t>(hi) << 32) | lo);
  }

  uint32_t unique_find(uint32_t level, uint32_t hi, uint32_t lo) const
  {
    auto const& t = levels_[level];
    size_t mask = t.slots.size() - 1;
    size_t i = triple_hash(hi, lo) & mask;
    while (t.slots[i] != empty_slot) {
      uint32_t id = t.slots[i];
      if (nodes_[id].hi == hi && nodes_[id].lo == lo)
        return id;
      i = (i + 1) & mask;
    }
    return empty_slot;
  }

  void unique_insert(uint32_t level, uint32_t id)
  {
    auto& t = levels_[level];
    if ((t.count + 1) * 10 >= t.slots.size() * 7)
      unique_grow(level);
    size_t mask = t.slots.size() - 1;
    size_t i = triple_hash(nodes_[id].hi, nodes_[id].lo) & mask;
    while (t.slots[i] != empty_slot)
      i = (i + 1) & mask;
    t.slots[i] = id;
    ++t.count;
  }

  void unique_grow(uint32_t level)
  {
    auto& t = levels_[level];
    std::vector<uint32_t> old = std::move(t.slots);
    t.slots.assign(old.size() * 2, empty_slot);
    size_t mask = t.slots.size() - 1;
    for (uint32_t id : old) {
      if (id == empty_slot)
        continue;
      size_t i = triple_hash(nodes_[id].hi, nodes_[id].lo) & mask;
      while (t.slots[i] != empty_slot)
        i = (i + 1) & mask;
      t.slots[i] = id;
    }
  }

  /* backward-shift deletion keeps linear probing valid without tombstones */
  void unique_erase(uint32_t level, uint32_t id)
  {
    auto& t = levels_[level];
    size_t mask = t.slots.size() - 1;
    size_t i = triple_hash(nodes_[id].hi, nodes_[id].lo) & mask;
    while (t.slots[i] != id) {
      assert(t.slots[i] != empty_slot && "erasing a node not in the table");
      i = (i + 1) & mask;
    }
    t.slots[i] = empty_slot;
    --t.count;
    size_t q = (i + 1) & mask;
    while (t.slots[q] != empty_slot) {
      uint32_t moved = t.slots[q];
      size_t ideal = triple_hash(nodes_[moved].hi, nodes_[moved].lo) & mask;
      if (((q - ideal) & mask) >= ((q - i) & mask)) {
        t.slots[i] = moved;
        t.slots[q] = empty_slot;
        i = q;
      }
      q = (q + 1) & mask;
    }
  }

  /* ---- node allocation ---- */

  uint32_t alloc_node(uint32_t level, uint32_t hi, uint32_t lo)
  {
    uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      nodes_[id] = {level, hi, lo};
    } else {
      if (nodes_.size() > max_node_id)
        throw error(errc::node_overflow, "node store exhausted");
      id = static_cast<uint32_t>(nodes_.size());
      nodes_.push_back({level, hi, lo});
    }
    ++stored_;
    ++created_;
    return id;
  }

  uint32_t mk_node(uint32_t level, uint32_t hi, uint32_t lo)
  {
    if (hi == lo)
      return hi;
    assert(nodes_[hi].level > level && nodes_[lo].level > level);
    uint32_t found = unique_find(level, hi, lo);
    if (found != empty_slot)
      return found;
    uint32_t id = alloc_node(level, hi, lo);
    unique_insert(level, id);
    if (in_reorder_) {
      if (id >= rc_.size())
        rc_.resize(id + 1, 0);
      ++rc_[hi];
      ++rc_[lo];
    }
    return id;
  }

  uint32_t level_of_id(uint32_t id) const { return nodes_[id].level; }

  /* ---- memoized operations ---- */

  std::optional<uint32_t> cache_find(uint64_t key)
  {
    if (!cache_enabled_)
      return std::nullopt;
    ++cache_lookups_;
    auto r = cache_.find(key);
    if (r)
      ++cache_hits_;
    return r;
  }

  void cache_put(uint64_t key, uint32_t val)
  {
    if (cache_enabled_)
      cache_.insert(key, val);
  }

  uint32_t and_rec(uint32_t a, uint32_t b)
  {
    if (a == 0 || b == 0)
      return 0;
    if (a == 1)
      return b;
    if (b == 1)
      return a;
    if (a == b)
      return a;
    if (a > b)
      std::swap(a, b);
    uint64_t key = key2(op_and, a, b);
    if (auto r = cache_find(key))
      return *r;
    auto [lvl, a1, a0, b1, b0] = split(a, b);
    uint32_t r = mk_node(lvl, and_rec(a1, b1), and_rec(a0, b0));
    cache_put(key, r);
    return r;
  }

  uint32_t or_rec(uint32_t a, uint32_t b)
  {
    if (a == 1 || b == 1)
      return 1;
    if (a == 0)
      return b;
    if (b == 0)
      return a;
    if (a == b)
      return a;
    if (a > b)
      std::swap(a, b);
    uint64_t key = key2(op_or, a, b);
    if (auto r = cache_find(key))
      return *r;
    auto [lvl, a1, a0, b1, b0] = split(a, b);
    uint32_t r = mk_node(lvl, or_rec(a1, b1), or_rec(a0, b0));
    cache_put(key, r);
    return r;
  }

  uint32_t xor_rec(uint32_t a, uint32_t b)
  {
    if (a == b)
      return 0;
    if (a == 0)
      return b;
    if (b == 0)
      return a;
    if (a == 1)
      return not_rec(b);
    if (b == 1)
      return not_rec(a);
    if (a > b)
      std::swap(a, b);
    uint64_t key = key2(op_xor, a, b);
    if (auto r = cache_find(key))
      return *r;
    auto [lvl, a1, a0, b1, b0] = split(a, b);
    uint32_t r = mk_node(lvl, xor_rec(a1, b1), xor_rec(a0, b0));
    cache_put(key, r);
    return r;
  }

  uint32_t not_rec(uint32_t a)
  {
    if (a == 0)
      return 1;
    if (a == 1)
      return 0;
    uint64_t key = key2(op_not, a, 0);
    if (auto r = cache_find(key))
      return *r;
    node const& n = nodes_[a];
    uint32_t r = mk_node(n.level, not_rec(n.hi), not_rec(n.lo));
    cache_put(key, r);
    return r;
  }

  uint32_t ite_rec(uint32_t f, uint32_t g, uint32_t h)
  {
    if (f == 1)
      return g;
    if (f == 0)
      return h;
    if (g == h)
      return g;
    if (g == 1 && h == 0)
      return f;
    if (g == 0 && h == 1)
      return not_rec(f);
    ++cache_lookups_;
    uint64_t ka = (static_cast<uint64_t>(f) << 30) | g;
    uint64_t kb = h;
    if (cache_enabled_) {
      if (auto r = ite_cache_.find(ka, kb)) {
        ++cache_hits_;
        return *r;
      }
    }
    uint32_t lf = nodes_[f].level, lg = nodes_[g].level, lh = nodes_[h].level;
    uint32_t lvl = std::min(lf, std::min(lg, lh));
    uint32_t f1 = f, f0 = f, g1 = g, g0 = g, h1 = h, h0 = h;
    if (lf == lvl) {
      f1 = nodes_[f].hi;
      f0 = nodes_[f].lo;
    }
    if (lg == lvl) {
      g1 = nodes_[g].hi;
      g0 = nodes_[g].lo;
    }
    if (lh == lvl) {
      h1 = nodes_[h].hi;
      h0 = nodes_[h].lo;
    }
    uint32_t r = mk_node(lvl, ite_rec(f1, g1, h1), ite_rec(f0, g0, h0));
    if (cache_enabled_)
      ite_cache_.insert(ka, kb, r);
    return r;
  }

  uint32_t cofactor_rec(uint32_t f, uint32_t vlevel, uint32_t var, bool value)
  {
    if (nodes_[f].level > vlevel)
      return f; // includes terminals: v cannot appear below
    node const& n = nodes_[f];
    if (n.level == vlevel)
      return value ? n.hi : n.lo;
    uint64_t key = key2(value ? op_cof1 : op_cof0, f, var);
    if (auto r = cache_find(key))
      return *r;
    uint32_t r = mk_node(n.level, cofactor_rec(n.hi, vlevel, var, value),
                         cofactor_rec(n.lo, vlevel, var, value));
    cache_put(key, r);
    return r;
  }

  struct split_result {
    uint32_t lvl, a1, a0, b1, b0;
  };

  split_result split(uint32_t a, uint32_t b) const
  {
    uint32_t la = nodes_[a].level, lb = nodes_[b].level;
    uint32_t lvl = std::min(la, lb);
    split_result s{lvl, a, a, b, b};
    if (la == lvl) {
      s.a1 = nodes_[a].hi;
      s.a0 = nodes_[a].lo;
    }
    if (lb == lvl) {
      s.b1 = nodes_[b].hi;
      s.b0 = nodes_[b].lo;
    }
    return s;
  }

  uint64_t count_rec(uint32_t f, std::unordered_map<uint32_t, uint64_t>& memo) const
  {
    // number of satisfying assignments over levels [level(f), nvars_),
    // scaled at the end by 2^level(root)
    if (f == 0)
      return 0;
    if (f == 1)
      return 1ull << 0; // caller applies level gap
    auto it = memo.find(f);
    if (it != memo.end())
      return it->second;
    node const& n = nodes_[f];
    uint32_t lh = n.hi <= 1 ? nvars_ : nodes_[n.hi].level;
    uint32_t ll = n.lo <= 1 ? nvars_ : nodes_[n.lo].level;
    uint64_t ch = count_rec(n.hi, memo) << (lh - n.level - 1);
    uint64_t cl = count_rec(n.lo, memo) << (ll - n.level - 1);
    uint64_t r = ch + cl;
    memo.emplace(f, r);
    return r;
  }

  /* ---- in-place adjacent level exchange ----
   *
   * Variables u (level x) and v (level x+1) trade places. Nodes at level x
   * keep their ids: independents are relabeled to x+1, dependents are
   * rewritten in place to test v. Surviving level-x+1 nodes move up to x;
   * the ones only the rewritten nodes referenced die. Reference counts from
   * the open session drive the deaths.
   */
  void swap_levels(uint32_t x)
  {
    assert(in_reorder_);
    uint32_t u = level2var_[x], v = level2var_[x + 1];
    level2var_[x] = v;
    level2var_[x + 1] = u;
    var2level_[u] = x + 1;
    var2level_[v] = x;

    std::vector<uint32_t> upper, lower;
    upper.reserve(levels_[x].count);
    lower.reserve(levels_[x + 1].count);
    for (uint32_t s : levels_[x].slots)
      if (s != empty_slot)
        upper.push_back(s);
    for (uint32_t s : levels_[x + 1].slots)
      if (s != empty_slot)
        lower.push_back(s);
    // deterministic processing order regardless of hash layout
    std::sort(upper.begin(), upper.end());
    std::sort(lower.begin(), lower.end());

    levels_[x].slots.assign(levels_[x].slots.size(), empty_slot);
    levels_[x].count = 0;
    levels_[x + 1].slots.assign(levels_[x + 1].slots.size(), empty_slot);
    levels_[x + 1].count = 0;

    std::vector<uint32_t> dependents;
    for (uint32_t n : upper) {
      uint32_t hi = nodes_[n].hi, lo = nodes_[n].lo;
      if (nodes_[hi].level != x + 1 && nodes_[lo].level != x + 1) {
        nodes_[n].level = x + 1;
        unique_insert(x + 1, n);
      } else {
        dependents.push_back(n);
      }
    }

    for (uint32_t n : dependents) {
      uint32_t t = nodes_[n].hi, e = nodes_[n].lo;
      uint32_t t1 = t, t0 = t, e1 = e, e0 = e;
      if (nodes_[t].level == x + 1) {
        t1 = nodes_[t].hi;
        t0 = nodes_[t].lo;
      }
      if (nodes_[e].level == x + 1) {
        e1 = nodes_[e].hi;
        e0 = nodes_[e].lo;
      }
      uint32_t a = swap_child(x + 1, t1, e1);
      uint32_t b = swap_child(x + 1, t0, e0);
      assert(a != b);
      release(t, x);
      release(e, x);
      nodes_[n].hi = a;
      nodes_[n].lo = b;
      assert(unique_find(x, a, b) == empty_slot);
      unique_insert(x, n);
    }

    for (uint32_t m : lower) {
      if (nodes_[m].level == freed_level)
        continue; // died above
      nodes_[m].level = x;
      unique_insert(x, m);
    }
    // ids freed in this swap become reusable only now, after the lower loop
    free_.insert(free_.end(), swap_dead_.begin(), swap_dead_.end());
    swap_dead_.clear();
    ++swaps_done_;
  }

  /* Child for a rewritten node: collapse, reuse, or create at level lvl. */
  uint32_t swap_child(uint32_t lvl, uint32_t hi, uint32_t lo)
  {
    if (hi == lo) {
      ++rc_[hi];
      return hi;
    }
    uint32_t found = unique_find(lvl, hi, lo);
    if (found != empty_slot) {
      ++rc_[found];
      return found;
    }
    uint32_t id = alloc_node(lvl, hi, lo);
    if (id >= rc_.size())
      rc_.resize(id + 1, 0);
    rc_[id] = 1;
    ++rc_[hi];
    ++rc_[lo];
    unique_insert(lvl, id);
    return id;
  }

  /* Drop one reference; free recursively when the count reaches zero.
   * Nodes at next_level (the swapped lower level) are not in any table. */
  void release(uint32_t id, uint32_t x)
  {
    if (id <= 1)
      return;
    assert(rc_[id] > 0);
    if (--rc_[id] > 0)
      return;
    uint32_t hi = nodes_[id].hi, lo = nodes_[id].lo;
    uint32_t lvl = nodes_[id].level;
    if (lvl != x + 1)
      unique_erase(lvl, id);
    nodes_[id].level = freed_level;
    swap_dead_.push_back(id);
    --stored_;
    release(hi, x);
    release(lo, x);
  }

public:
  uint64_t swaps_done() const { return swaps_done_; }

private:
  uint32_t serial_ = 0;
  uint32_t nvars_ = 0;
  bool cache_enabled_ = true;
  bool in_reorder_ = false;
  uint32_t frozen_ = 0;

  std::vector<node> nodes_;
  std::vector<uint32_t> free_;
  std::vector<uint32_t> swap_dead_;
  std::vector<level_table> levels_;
  std::vector<uint32_t> var2level_, level2var_;
  std::unordered_map<uint32_t, uint32_t> roots_;
  std::vector<uint32_t> rc_;

  detail::flat_cache cache_;
  detail::flat_cache2 ite_cache_;

  uint64_t stored_ = 0;
  uint64_t created_ = 0;
  uint64_t cache_lookups_ = 0;
  uint64_t cache_hits_ = 0;
  uint64_t swaps_done_ = 0;
};

} // namespace tablebdd
