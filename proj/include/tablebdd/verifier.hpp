#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdd.hpp"
#include "compressor.hpp"
#include "state_codec.hpp"
#include "table_io.hpp"

namespace tablebdd {

/* ------------------------------------------------------------------ */
/* property specifications                                             */
/* ------------------------------------------------------------------ */

enum class cmp_op { le, lt, eq, ge, gt };

inline std::string_view to_string(cmp_op c)
{
  switch (c) {
  case cmp_op::le: return "<=";
  case cmp_op::lt: return "<";
  case cmp_op::eq: return "=";
  case cmp_op::ge: return ">=";
  case cmp_op::gt: return ">";
  }
  return "?";
}

inline cmp_op parse_cmp(std::string_view s)
{
  if (s == "<=") return cmp_op::le;
  if (s == "<") return cmp_op::lt;
  if (s == "=" || s == "==") return cmp_op::eq;
  if (s == ">=") return cmp_op::ge;
  if (s == ">") return cmp_op::gt;
  throw error(errc::parse_error, "unknown comparator '" + std::string(s) + "'");
}

inline bool cmp_holds(double a, cmp_op op, double b)
{
  switch (op) {
  case cmp_op::le: return a <= b;
  case cmp_op::lt: return a < b;
  case cmp_op::eq: return a == b;
  case cmp_op::ge: return a >= b;
  case cmp_op::gt: return a > b;
  }
  return false;
}

struct relation {
  dimension a;
  cmp_op op;
  dimension b;
};

/*! \brief Interval constraints per dimension plus relational constraints
 * between same-unit dimensions, with the expected advisory set R: the
 * property holds iff every constrained state's advisory lies in R. */
struct property_spec {
  std::string name;
  std::array<bool, 5> applicable{true, true, true, true, true};
  std::array<std::optional<std::pair<double, double>>, 6> intervals;
  std::vector<relation> relations;
  std::array<bool, 5> expected{};

  void validate() const
  {
    bool any_applicable = false;
    for (bool b : applicable)
      any_applicable |= b;
    if (!any_applicable)
      throw error(errc::parse_error, name + ": empty a_prev set");
    uint32_t r = 0;
    for (bool b : expected)
      r += b ? 1 : 0;
    if (r == 0 || r == 5)
      throw error(errc::parse_error, name + ": expected set must be a nonempty strict subset");
    for (auto const& iv : intervals)
      if (iv && !(iv->first <= iv->second))
        throw error(errc::parse_error, name + ": interval bounds out of order");
    for (auto const& rel : relations)
      if (dimension_units[static_cast<size_t>(rel.a)] !=
          dimension_units[static_cast<size_t>(rel.b)])
        throw error(errc::parse_error, name + ": relational constraint mixes units");
  }
};

struct counterexample {
  state_index state;
  std::array<double, 6> values{};
  advisory actual = advisory::coc;
  std::array<bool, 5> expected{};
};

struct verdict {
  bool valid = false;
  std::optional<counterexample> cex;
  std::vector<dimension> vacuous; // interval constraints selecting no grid point
};

/* ------------------------------------------------------------------ */
/* compilation to BDDs                                                 */
/* ------------------------------------------------------------------ */

/*! \brief Cube over one dimension's bits for a single index. */
inline node_ref dimension_cube(bdd_manager& m, bit_layout const& layout, dimension d,
                               uint32_t index)
{
  uint32_t const w = layout.width(d);
  uint32_t const code = gray_encode(index, w);
  uint32_t const base = layout.first_var(d);
  std::vector<std::pair<uint32_t, bool>> lits;
  lits.reserve(w);
  for (uint32_t b = 0; b < w; ++b)
    lits.emplace_back(base + b, ((code >> (w - 1 - b)) & 1u) != 0);
  return m.mk_cube(lits);
}

struct compiled_property {
  node_ref constraints{};
  std::vector<dimension> vacuous;
};

/*! \brief BDD of the property's precondition: the conjunction of every
 * interval's index-set disjunction, every relational constraint's pair
 * disjunction, and the domain-validity function. A vacuous interval
 * (selecting no grid point) is reported but still conjoined (as FALSE). */
inline compiled_property compile_property(bdd_manager& m, quantization_grid const& grid,
                                          bit_layout const& layout, property_spec const& p)
{
  p.validate();
  compiled_property out;
  node_ref acc = domain_validity(m, layout, grid);

  for (size_t d = 0; d < 6; ++d) {
    if (!p.intervals[d])
      continue;
    dimension dim = static_cast<dimension>(d);
    auto idx = value_bounds_to_index_set(grid, dim, p.intervals[d]->first,
                                         p.intervals[d]->second);
    if (idx.empty())
      out.vacuous.push_back(dim);
    std::vector<bool> member(grid.cardinality(dim), false);
    for (uint32_t i : idx)
      member[i] = true;
    node_ref f = index_set_function(m, layout, grid, dim,
                                    [&member](uint32_t i) { return member[i]; });
    acc = m.apply_and(acc, f);
  }

  for (auto const& rel : p.relations) {
    node_ref f = m.bdd_false();
    uint32_t ca = grid.cardinality(rel.a), cb = grid.cardinality(rel.b);
    for (uint32_t i = 0; i < ca; ++i) {
      for (uint32_t j = 0; j < cb; ++j) {
        if (!cmp_holds(grid.value(rel.a, i), rel.op, grid.value(rel.b, j)))
          continue;
        node_ref pair = m.apply_and(dimension_cube(m, layout, rel.a, i),
                                    dimension_cube(m, layout, rel.b, j));
        f = m.apply_or(f, pair);
      }
    }
    acc = m.apply_and(acc, f);
  }

  out.constraints = acc;
  return out;
}

/*! \brief Disjunction of the advisory regions for R: kept advisories come
 * from the global diagram by selector cofactoring, the eliminated one by
 * complement within the valid domain. */
inline node_ref compile_expected(bdd_manager& m, global_root const& g, bit_layout const& layout,
                                 quantization_grid const& grid, std::array<bool, 5> const& r)
{
  node_ref kept_union = m.bdd_false();
  std::array<node_ref, 5> region{};
  for (uint32_t a = 0; a < 5; ++a) {
    advisory adv = static_cast<advisory>(a);
    if (!g.sel.has(adv))
      continue;
    region[a] = advisory_region(m, g, adv);
    kept_union = m.apply_or(kept_union, region[a]);
  }
  node_ref validity = domain_validity(m, layout, grid);
  region[static_cast<size_t>(g.eliminated)] =
      m.apply_and(m.negate(kept_union), validity);

  node_ref acc = m.bdd_false();
  for (uint32_t a = 0; a < 5; ++a)
    if (r[a])
      acc = m.apply_or(acc, region[a]);
  return acc;
}

/* ------------------------------------------------------------------ */
/* checking                                                            */
/* ------------------------------------------------------------------ */

/*! \brief Decide the property by intersection emptiness: the violation
 * region is constraints AND NOT expected; Valid iff it is the empty BDD,
 * otherwise a satisfying assignment decodes to the counterexample. */
inline verdict check(bdd_manager& m, global_root const& g, bit_layout const& layout,
                     quantization_grid const& grid, property_spec const& p)
{
  if (!p.applicable[static_cast<size_t>(g.a_prev)])
    throw error(errc::inapplicable_property,
                p.name + " does not apply to a_prev=" + std::string(to_string(g.a_prev)));
  compiled_property cp = compile_property(m, grid, layout, p);
  node_ref expected = compile_expected(m, g, layout, grid, p.expected);
  node_ref violation = m.apply_and(cp.constraints, m.negate(expected));

  verdict v;
  v.vacuous = cp.vacuous;
  v.valid = m.is_false(violation);
  if (!v.valid) {
    assignment a = *m.pick_sat(violation);
    auto idx = layout.decode_state_bits(a);
    counterexample cex;
    for (size_t d = 0; d < 6; ++d) {
      cex.state.i[d] = idx[d];
      cex.values[d] = grid.value(static_cast<dimension>(d), idx[d]);
    }
    cex.actual = classify(m, g, layout, grid, cex.state);
    cex.expected = p.expected;
    v.cex = cex;
  }
  return v;
}

/*! \brief Independent oracle: scan every state, apply the constraints on raw
 * grid values, and compare the table's advisory against R. Returns the
 * lexicographically smallest violating state. */
inline verdict brute_force_check(advisory_table const& t, property_spec const& p)
{
  if (!p.applicable[static_cast<size_t>(t.a_prev)])
    throw error(errc::inapplicable_property,
                p.name + " does not apply to a_prev=" + std::string(to_string(t.a_prev)));
  p.validate();
  verdict v;
  for (size_t d = 0; d < 6; ++d) {
    if (!p.intervals[d])
      continue;
    if (value_bounds_to_index_set(t.grid, static_cast<dimension>(d), p.intervals[d]->first,
                                  p.intervals[d]->second)
            .empty())
      v.vacuous.push_back(static_cast<dimension>(d));
  }

  auto const cards = t.grid.cardinalities();
  state_index s;
  uint64_t const n = t.size();
  for (uint64_t off = 0; off < n; ++off) {
    bool in_region = true;
    for (size_t d = 0; d < 6 && in_region; ++d) {
      double val = t.grid.value(static_cast<dimension>(d), s.i[d]);
      if (p.intervals[d] && !(p.intervals[d]->first <= val && val <= p.intervals[d]->second))
        in_region = false;
    }
    for (auto const& rel : p.relations) {
      if (!in_region)
        break;
      if (!cmp_holds(t.grid.value(rel.a, s[rel.a]), rel.op, t.grid.value(rel.b, s[rel.b])))
        in_region = false;
    }
    if (in_region && !p.expected[t.entries[off]]) {
      counterexample cex;
      cex.state = s;
      for (size_t d = 0; d < 6; ++d)
        cex.values[d] = t.grid.value(static_cast<dimension>(d), s.i[d]);
      cex.actual = t.at(off);
      cex.expected = p.expected;
      v.cex = cex;
      v.valid = false;
      return v;
    }
    // row-major increment
    for (size_t d = 6; d-- > 0;) {
      if (++s.i[d] < cards[d])
        break;
      s.i[d] = 0;
    }
  }
  v.valid = true;
  return v;
}

/* ------------------------------------------------------------------ */
/* property files (JSON)                                               */
/* ------------------------------------------------------------------ */

inline property_spec property_from_json(nlohmann::json const& j)
{
  property_spec p;
  if (!j.is_object())
    throw error(errc::parse_error, "property must be an object");
  p.name = j.value("name", "unnamed");
  if (j.contains("a_prev")) {
    p.applicable = {false, false, false, false, false};
    for (auto const& a : j.at("a_prev"))
      p.applicable[static_cast<size_t>(parse_advisory(a.get<std::string>()))] = true;
  }
  if (j.contains("intervals")) {
    for (auto const& [key, val] : j.at("intervals").items()) {
      dimension d = parse_dimension(key);
      if (!val.is_array() || val.size() != 2)
        throw error(errc::parse_error, p.name + ": interval for " + key + " must be [lo, hi]");
      p.intervals[static_cast<size_t>(d)] = {val[0].get<double>(), val[1].get<double>()};
    }
  }
  if (j.contains("relations")) {
    for (auto const& r : j.at("relations")) {
      std::istringstream is(r.get<std::string>());
      std::string a, op, b;
      if (!(is >> a >> op >> b))
        throw error(errc::parse_error, p.name + ": relation must read 'dimA CMP dimB'");
      p.relations.push_back({parse_dimension(a), parse_cmp(op), parse_dimension(b)});
    }
  }
  if (!j.contains("expected"))
    throw error(errc::parse_error, p.name + ": missing expected advisory set");
  for (auto const& a : j.at("expected"))
    p.expected[static_cast<size_t>(parse_advisory(a.get<std::string>()))] = true;
  p.validate();
  return p;
}

inline std::vector<property_spec> properties_from_json(nlohmann::json const& j)
{
  std::vector<property_spec> out;
  if (j.is_array()) {
    for (auto const& e : j)
      out.push_back(property_from_json(e));
  } else if (j.contains("properties")) {
    for (auto const& e : j.at("properties"))
      out.push_back(property_from_json(e));
  } else {
    out.push_back(property_from_json(j));
  }
  return out;
}

inline std::vector<property_spec> load_property_file(std::string const& path)
{
  std::ifstream f(path);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (nlohmann::json::exception const& e) {
    throw error(errc::parse_error, "'" + path + "': " + e.what());
  }
  return properties_from_json(j);
}

} // namespace tablebdd
