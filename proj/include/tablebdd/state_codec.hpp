#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "bdd.hpp"
#include "errors.hpp"

namespace tablebdd {

/* ------------------------------------------------------------------ */
/* advisories                                                          */
/* ------------------------------------------------------------------ */

/*! \brief The five horizontal advisories, in canonical (tie-break) order. */
enum class advisory : uint8_t { coc = 0, wl = 1, wr = 2, sl = 3, sr = 4 };

inline constexpr uint32_t advisory_count = 5;

inline constexpr std::array<std::string_view, 5> advisory_names{"COC", "WL", "WR", "SL", "SR"};

inline std::string_view to_string(advisory a) { return advisory_names[static_cast<size_t>(a)]; }

inline advisory parse_advisory(std::string_view s)
{
  for (size_t i = 0; i < advisory_names.size(); ++i)
    if (advisory_names[i] == s)
      return static_cast<advisory>(i);
  throw error(errc::parse_error, "unknown advisory '" + std::string(s) + "'");
}

/* ------------------------------------------------------------------ */
/* dimensions                                                          */
/* ------------------------------------------------------------------ */

enum class dimension : uint8_t { tau = 0, rho = 1, theta = 2, psi = 3, v_own = 4, v_int = 5 };

inline constexpr uint32_t dimension_count = 6;

inline constexpr std::array<std::string_view, 6> dimension_names{"tau",  "rho",  "theta",
                                                                 "psi",  "v_own", "v_int"};
inline constexpr std::array<std::string_view, 6> dimension_units{"s",  "ft",  "rad",
                                                                 "rad", "ft/s", "ft/s"};

inline std::string_view to_string(dimension d) { return dimension_names[static_cast<size_t>(d)]; }

inline dimension parse_dimension(std::string_view s)
{
  for (size_t i = 0; i < dimension_names.size(); ++i)
    if (dimension_names[i] == s)
      return static_cast<dimension>(i);
  throw error(errc::parse_error, "unknown dimension '" + std::string(s) + "'");
}

inline constexpr std::array<uint32_t, 6> standard_cardinalities{10, 41, 39, 39, 12, 12};

/* ------------------------------------------------------------------ */
/* quantization grid                                                   */
/* ------------------------------------------------------------------ */

/*! \brief Per-dimension breakpoint values of the discretized state space.
 *
 * Breakpoints are strictly increasing. The shipped defaults are synthetic
 * linear grids over plausible physical ranges; real breakpoint data can be
 * supplied through a grid configuration file.
 */
struct quantization_grid {
  std::array<std::vector<double>, 6> points;

  uint32_t cardinality(dimension d) const
  {
    return static_cast<uint32_t>(points[static_cast<size_t>(d)].size());
  }

  std::array<uint32_t, 6> cardinalities() const
  {
    std::array<uint32_t, 6> c{};
    for (size_t d = 0; d < 6; ++d)
      c[d] = static_cast<uint32_t>(points[d].size());
    return c;
  }

  double value(dimension d, uint32_t index) const
  {
    auto const& v = points[static_cast<size_t>(d)];
    if (index >= v.size())
      throw error(errc::index_out_of_range,
                  std::string(to_string(d)) + " index " + std::to_string(index));
    return v[index];
  }

  uint64_t state_count() const
  {
    uint64_t n = 1;
    for (auto const& v : points)
      n *= v.size();
    return n;
  }

  /*! \brief Validate monotonicity; unless `relaxed`, cardinalities must be
   * the operational (10,41,39,39,12,12). */
  void validate(bool relaxed) const
  {
    for (size_t d = 0; d < 6; ++d) {
      auto const& v = points[d];
      if (v.size() < 2)
        throw error(errc::bad_grid, std::string(dimension_names[d]) + ": needs >= 2 breakpoints");
      for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i]))
          throw error(errc::bad_grid,
                      std::string(dimension_names[d]) + ": breakpoints not strictly increasing");
    }
    if (!relaxed && cardinalities() != standard_cardinalities)
      throw error(errc::bad_grid,
                  "cardinalities differ from (10,41,39,39,12,12); pass relaxed to allow");
  }

  /*! \brief Synthetic linear grid over the default physical ranges. */
  static quantization_grid linear(std::array<uint32_t, 6> counts)
  {
    constexpr double pi = 3.14159265358979323846;
    constexpr std::array<std::pair<double, double>, 6> ranges{{
        {0.0, 100.0},    // tau [s]
        {0.0, 62000.0},  // rho [ft]
        {-pi, pi},       // theta [rad]
        {-pi, pi},       // psi [rad]
        {60.0, 1200.0},  // v_own [ft/s]
        {60.0, 1200.0},  // v_int [ft/s]
    }};
    quantization_grid g;
    for (size_t d = 0; d < 6; ++d) {
      uint32_t n = counts[d];
      if (n < 2)
        throw error(errc::bad_grid, "dimension needs >= 2 points");
      auto [lo, hi] = ranges[d];
      g.points[d].resize(n);
      for (uint32_t i = 0; i < n; ++i)
        g.points[d][i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    }
    return g;
  }

  static quantization_grid standard() { return linear(standard_cardinalities); }

  /*! \brief Stable 64-bit fingerprint of cardinalities and breakpoints. */
  uint64_t fingerprint() const
  {
    uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    auto feed = [&h](char const* s) {
      for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 0x100000001b3ull;
      }
    };
    char buf[64];
    for (size_t d = 0; d < 6; ++d) {
      std::snprintf(buf, sizeof buf, "%zu:", points[d].size());
      feed(buf);
      for (double v : points[d]) {
        std::snprintf(buf, sizeof buf, "%.17g;", v);
        feed(buf);
      }
    }
    return h;
  }
};

/* ------------------------------------------------------------------ */
/* state indices                                                       */
/* ------------------------------------------------------------------ */

/*! \brief Integer indices into the grids, one per dimension. */
struct state_index {
  std::array<uint32_t, 6> i{};

  uint32_t operator[](dimension d) const { return i[static_cast<size_t>(d)]; }
  uint32_t& operator[](dimension d) { return i[static_cast<size_t>(d)]; }

  friend bool operator==(state_index const&, state_index const&) = default;
};

inline void validate_state(quantization_grid const& g, state_index const& s)
{
  for (size_t d = 0; d < 6; ++d)
    if (s.i[d] >= g.points[d].size())
      throw error(errc::invalid_state, std::string(dimension_names[d]) + " index " +
                                           std::to_string(s.i[d]) + " out of range");
}

/*! \brief Row-major offset, dimension order (tau, rho, theta, psi, v_own, v_int). */
inline uint64_t row_major_offset(quantization_grid const& g, state_index const& s)
{
  uint64_t off = 0;
  for (size_t d = 0; d < 6; ++d)
    off = off * g.points[d].size() + s.i[d];
  return off;
}

inline state_index state_at(quantization_grid const& g, uint64_t offset)
{
  state_index s;
  for (size_t d = 6; d-- > 0;) {
    uint64_t c = g.points[d].size();
    s.i[d] = static_cast<uint32_t>(offset % c);
    offset /= c;
  }
  return s;
}

/* ------------------------------------------------------------------ */
/* Gray code                                                           */
/* ------------------------------------------------------------------ */

/*! \brief Reflected-binary Gray code of i, as a `width`-bit pattern
 * (bit width-1 of the result is the most significant). */
inline uint32_t gray_encode(uint32_t i, uint32_t width)
{
  if (width >= 32 || i >= (1u << width))
    throw error(errc::index_out_of_range,
                "gray_encode(" + std::to_string(i) + ") needs more than " +
                    std::to_string(width) + " bits");
  return i ^ (i >> 1);
}

/*! \brief Inverse of gray_encode (width-independent prefix scan). */
inline uint32_t gray_decode(uint32_t code)
{
  code ^= code >> 16;
  code ^= code >> 8;
  code ^= code >> 4;
  code ^= code >> 2;
  code ^= code >> 1;
  return code;
}

/* ------------------------------------------------------------------ */
/* bit layout                                                          */
/* ------------------------------------------------------------------ */

/*! \brief Boolean embedding of the state space: two selector variables
 * (bdd1, bdd0) at layout positions 0 and 1, then each dimension's Gray-coded
 * bits, most significant first, in dimension order.
 *
 * For the operational cardinalities the widths are (4,6,6,6,4,4): 30 state
 * bits, 32 variables in total.
 */
struct bit_layout {
  std::array<uint32_t, 6> widths{};

  static constexpr uint32_t var_bdd1 = 0;
  static constexpr uint32_t var_bdd0 = 1;

  static bit_layout for_grid(quantization_grid const& g)
  {
    bit_layout l;
    for (size_t d = 0; d < 6; ++d) {
      uint32_t card = static_cast<uint32_t>(g.points[d].size());
      l.widths[d] = std::max(1u, static_cast<uint32_t>(std::bit_width(card - 1)));
    }
    return l;
  }

  uint32_t width(dimension d) const { return widths[static_cast<size_t>(d)]; }

  uint32_t state_bits() const
  {
    uint32_t n = 0;
    for (auto w : widths)
      n += w;
    return n;
  }

  uint32_t var_count() const { return 2 + state_bits(); }

  /*! \brief Variable id of the dimension's most significant bit. */
  uint32_t first_var(dimension d) const
  {
    uint32_t v = 2;
    for (size_t k = 0; k < static_cast<size_t>(d); ++k)
      v += widths[k];
    return v;
  }

  /*! \brief Variable id of bit `b` of dimension d (b = 0 is the MSB). */
  uint32_t var_of(dimension d, uint32_t b) const { return first_var(d) + b; }

  std::string var_name(uint32_t var) const
  {
    if (var == var_bdd1)
      return "bdd1";
    if (var == var_bdd0)
      return "bdd0";
    uint32_t v = 2;
    for (size_t d = 0; d < 6; ++d) {
      if (var < v + widths[d])
        return std::string(dimension_names[d]) + std::to_string(var - v);
      v += widths[d];
    }
    throw error(errc::undeclared_variable, "variable " + std::to_string(var));
  }

  uint32_t var_by_name(std::string_view name) const
  {
    for (uint32_t v = 0; v < var_count(); ++v)
      if (var_name(v) == name)
        return v;
    throw error(errc::parse_error, "unknown variable '" + std::string(name) + "'");
  }

  /*! \brief Append the Gray-coded literals of a state (30 for the standard
   * layout) to `out`; selector bits are not included. */
  void state_literals(state_index const& s, std::vector<std::pair<uint32_t, bool>>& out) const
  {
    for (size_t d = 0; d < 6; ++d) {
      uint32_t w = widths[d];
      uint32_t code = gray_encode(s.i[d], w);
      uint32_t base = first_var(static_cast<dimension>(d));
      for (uint32_t b = 0; b < w; ++b)
        out.emplace_back(base + b, ((code >> (w - 1 - b)) & 1u) != 0);
    }
  }

  /*! \brief Set the state's bits (and nothing else) in an assignment. */
  void assign_state(state_index const& s, assignment& a) const
  {
    for (size_t d = 0; d < 6; ++d) {
      uint32_t w = widths[d];
      uint32_t code = gray_encode(s.i[d], w);
      uint32_t base = first_var(static_cast<dimension>(d));
      for (uint32_t b = 0; b < w; ++b)
        a.set(base + b, ((code >> (w - 1 - b)) & 1u) != 0);
    }
  }

  /*! \brief Recover raw per-dimension indices from an assignment over the
   * layout's variables. Indices may exceed the grid cardinalities when the
   * assignment carries an unused code. */
  std::array<uint32_t, 6> decode_state_bits(assignment const& a) const
  {
    std::array<uint32_t, 6> idx{};
    for (size_t d = 0; d < 6; ++d) {
      uint32_t w = widths[d];
      uint32_t base = first_var(static_cast<dimension>(d));
      uint32_t code = 0;
      for (uint32_t b = 0; b < w; ++b)
        code = (code << 1) | (a.has(base + b) && a.get(base + b) ? 1u : 0u);
      idx[d] = gray_decode(code);
    }
    return idx;
  }
};

/* ------------------------------------------------------------------ */
/* cube and set construction                                           */
/* ------------------------------------------------------------------ */

/*! \brief Boolean cube of a state: conjunction of its 30 Gray-bit literals;
 * true exactly on that state's bit pattern. */
inline node_ref state_to_cube(bdd_manager& m, bit_layout const& layout,
                              quantization_grid const& grid, state_index const& s)
{
  validate_state(grid, s);
  std::vector<std::pair<uint32_t, bool>> lits;
  lits.reserve(layout.state_bits());
  layout.state_literals(s, lits);
  return m.mk_cube(lits);
}

/*! \brief Build a function over one dimension's bits; `leaf(pattern)` gives
 * the function value (as a BDD) for each of the 2^width bit patterns, MSB
 * first. Construction goes through ite and is valid under any variable
 * order. */
template <typename LeafFn>
node_ref build_dimension_function(bdd_manager& m, bit_layout const& layout, dimension d,
                                  LeafFn&& leaf)
{
  uint32_t const w = layout.width(d);
  uint32_t const base = layout.first_var(d);
  auto rec = [&](auto&& self, uint32_t depth, uint32_t prefix) -> node_ref {
    if (depth == w)
      return leaf(prefix);
    node_ref hi = self(self, depth + 1, (prefix << 1) | 1u);
    node_ref lo = self(self, depth + 1, prefix << 1);
    if (hi == lo)
      return hi;
    return m.ite(m.mk_var(base + depth), hi, lo);
  };
  return rec(rec, 0, 0);
}

/*! \brief Characteristic function of an index set of one dimension:
 * true iff the dimension's bits spell a valid Gray code whose index
 * satisfies `pred`. */
template <typename Pred>
node_ref index_set_function(bdd_manager& m, bit_layout const& layout,
                            quantization_grid const& grid, dimension d, Pred&& pred)
{
  uint32_t const card = grid.cardinality(d);
  return build_dimension_function(m, layout, d, [&](uint32_t pattern) {
    uint32_t idx = gray_decode(pattern);
    return (idx < card && pred(idx)) ? m.bdd_true() : m.bdd_false();
  });
}

/*! \brief Conjunction over all dimensions of "bits spell a valid code":
 * the domain-validity function used by coverage checks and the verifier. */
inline node_ref domain_validity(bdd_manager& m, bit_layout const& layout,
                                quantization_grid const& grid)
{
  node_ref acc = m.bdd_true();
  for (size_t d = 0; d < 6; ++d) {
    node_ref dv = index_set_function(m, layout, grid, static_cast<dimension>(d),
                                     [](uint32_t) { return true; });
    acc = m.apply_and(acc, dv);
  }
  return acc;
}

/*! \brief All indices whose breakpoint value lies in [lo, hi] (inclusive). */
inline std::vector<uint32_t> value_bounds_to_index_set(quantization_grid const& grid, dimension d,
                                                       double lo, double hi)
{
  if (!(lo <= hi))
    throw error(errc::parse_error, "interval bounds out of order");
  std::vector<uint32_t> out;
  uint32_t card = grid.cardinality(d);
  for (uint32_t i = 0; i < card; ++i) {
    double v = grid.value(d, i);
    if (lo <= v && v <= hi)
      out.push_back(i);
  }
  return out;
}

} // namespace tablebdd
