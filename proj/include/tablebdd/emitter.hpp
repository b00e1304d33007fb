#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bdd.hpp"
#include "compressor.hpp"
#include "errors.hpp"
#include "state_codec.hpp"

namespace tablebdd {

inline constexpr uint32_t diagram_format_version = 1;

/* ------------------------------------------------------------------ */
/* diagram text format                                                 */
/* ------------------------------------------------------------------ */

/* A DDDMP-like documented text format:
 *
 *   tablebdd-diagram 1
 *   kind global            (or: root)
 *   vars 32
 *   order bdd1 bdd0 ...    (variable names, level 0 first)
 *   frozen 2
 *   a_prev SR              (kind global only)
 *   selector COC 1 1       (one line per kept advisory)
 *   eliminated WL
 *   grid-fp 0123456789abcdef
 *   nodes N
 *   <id> <var-name> <then-id> <else-id>   (N lines, children before parents;
 *                                          ids 0 and 1 are FALSE and TRUE)
 *   root <id>
 *   end
 */

namespace detail {

inline void write_diagram_body(std::ostream& os, bdd_manager const& m,
                               bit_layout const& layout)
{
  auto order = m.current_order();
  os << "vars " << m.var_count() << "\n";
  os << "order";
  for (uint32_t v : order)
    os << ' ' << layout.var_name(v);
  os << "\n";
  os << "frozen " << m.frozen_count() << "\n";
}

inline void write_nodes(std::ostream& os, bdd_manager const& m, node_ref root,
                        bit_layout const& layout)
{
  auto topo = m.topo_order(root);
  std::unordered_map<uint32_t, uint64_t> file_id;
  file_id[0] = 0;
  file_id[1] = 1;
  os << "nodes " << topo.size() << "\n";
  uint64_t next = 2;
  for (uint32_t id : topo) {
    auto nv = m.view_id(id);
    file_id[id] = next;
    os << next << ' ' << layout.var_name(m.var_at_level(nv.level)) << ' ' << file_id.at(nv.hi)
       << ' ' << file_id.at(nv.lo) << "\n";
    ++next;
  }
  os << "root " << file_id.at(m.view(root).id) << "\n";
  os << "end\n";
}

} // namespace detail

/*! \brief Serialize the assembled single-root diagram. Byte-identical output
 * for identical diagrams. */
inline void save_diagram(bdd_manager const& m, global_root const& g, bit_layout const& layout,
                         uint64_t grid_fp, std::string const& path)
{
  std::ostringstream os;
  os << "tablebdd-diagram " << diagram_format_version << "\n";
  os << "kind global\n";
  detail::write_diagram_body(os, m, layout);
  os << "a_prev " << to_string(g.a_prev) << "\n";
  for (uint32_t a = 0; a < 5; ++a) {
    advisory adv = static_cast<advisory>(a);
    if (!g.sel.has(adv))
      continue;
    auto [b1, b0] = g.sel.bits(adv);
    os << "selector " << to_string(adv) << ' ' << (b1 ? 1 : 0) << ' ' << (b0 ? 1 : 0) << "\n";
  }
  os << "eliminated " << to_string(g.eliminated) << "\n";
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(grid_fp));
  os << "grid-fp " << fp << "\n";
  detail::write_nodes(os, m, g.root, layout);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "' for writing");
  f << os.str();
  if (!f)
    throw error(errc::io_error, "write failed for '" + path + "'");
}

/*! \brief Per-root dump (no selector metadata), same node format. */
inline void save_root(bdd_manager const& m, node_ref root, bit_layout const& layout,
                      uint64_t grid_fp, std::string const& path)
{
  std::ostringstream os;
  os << "tablebdd-diagram " << diagram_format_version << "\n";
  os << "kind root\n";
  detail::write_diagram_body(os, m, layout);
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(grid_fp));
  os << "grid-fp " << fp << "\n";
  detail::write_nodes(os, m, root, layout);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "' for writing");
  f << os.str();
}

struct loaded_diagram {
  std::string kind;
  node_ref root{};
  std::optional<global_root> global; // set when kind == global
  uint64_t grid_fp = 0;
};

/*! \brief Load a diagram into a fresh manager (capacity must match; the
 * file's variable order and frozen prefix are installed). */
inline loaded_diagram load_diagram(bdd_manager& m, bit_layout const& layout,
                                   std::string const& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "'");
  std::string line;
  uint64_t line_no = 0;
  auto next_line = [&](bool required) -> bool {
    while (std::getline(f, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (!line.empty())
        return true;
    }
    if (required)
      throw error(errc::truncated_payload, "'" + path + "' ends early at line " +
                                               std::to_string(line_no));
    return false;
  };
  auto fields = [](std::string const& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w)
      out.push_back(w);
    return out;
  };

  next_line(true);
  {
    auto fs = fields(line);
    if (fs.size() != 2 || fs[0] != "tablebdd-diagram")
      throw error(errc::bad_magic, "'" + path + "' is not a diagram file");
    if (fs[1] != std::to_string(diagram_format_version))
      throw error(errc::version_mismatch, "diagram format version " + fs[1]);
  }

  loaded_diagram out;
  std::optional<selector_map> sel;
  std::optional<advisory> eliminated, a_prev;
  uint64_t declared_nodes = 0;
  std::vector<std::string> order_names;
  uint32_t frozen = 0;

  // header lines until "nodes"
  for (;;) {
    next_line(true);
    auto fs = fields(line);
    if (fs.empty())
      continue;
    if (fs[0] == "kind" && fs.size() == 2) {
      out.kind = fs[1];
    } else if (fs[0] == "vars" && fs.size() == 2) {
      if (std::stoul(fs[1]) != m.var_count())
        throw error(errc::parse_error, "variable count mismatch: file has " + fs[1]);
    } else if (fs[0] == "order") {
      order_names.assign(fs.begin() + 1, fs.end());
    } else if (fs[0] == "frozen" && fs.size() == 2) {
      frozen = static_cast<uint32_t>(std::stoul(fs[1]));
    } else if (fs[0] == "a_prev" && fs.size() == 2) {
      a_prev = parse_advisory(fs[1]);
    } else if (fs[0] == "selector" && fs.size() == 4) {
      if (!sel)
        sel.emplace();
      sel->set(parse_advisory(fs[1]), fs[2] == "1", fs[3] == "1");
    } else if (fs[0] == "eliminated" && fs.size() == 2) {
      eliminated = parse_advisory(fs[1]);
    } else if (fs[0] == "grid-fp" && fs.size() == 2) {
      out.grid_fp = std::stoull(fs[1], nullptr, 16);
    } else if (fs[0] == "nodes" && fs.size() == 2) {
      declared_nodes = std::stoull(fs[1]);
      break;
    } else {
      throw error(errc::parse_error, "unrecognized header line " + std::to_string(line_no));
    }
  }

  if (order_names.size() != m.var_count())
    throw error(errc::parse_error, "order must list every variable");
  std::vector<uint32_t> order;
  order.reserve(order_names.size());
  for (auto const& n : order_names)
    order.push_back(layout.var_by_name(n));
  m.set_order(order);
  if (frozen > 0) {
    std::vector<uint32_t> fv(order.begin(), order.begin() + frozen);
    m.freeze(fv);
  }

  std::unordered_map<uint64_t, node_ref> by_file_id;
  by_file_id[0] = m.bdd_false();
  by_file_id[1] = m.bdd_true();
  auto child = [&](uint64_t self_id, uint64_t ref) {
    auto it = by_file_id.find(ref);
    if (it != by_file_id.end())
      return it->second;
    if (ref >= self_id)
      throw error(errc::cyclic_reference, "node " + std::to_string(self_id) +
                                              " references " + std::to_string(ref));
    throw error(errc::dangling_node,
                "node " + std::to_string(self_id) + " references undefined " + std::to_string(ref));
  };

  uint64_t last_id = 0;
  for (uint64_t k = 0; k < declared_nodes; ++k) {
    next_line(true);
    auto fs = fields(line);
    if (fs.size() != 4)
      throw error(errc::parse_error, "bad node record at line " + std::to_string(line_no));
    uint64_t id = std::stoull(fs[0]);
    if (id <= 1 || by_file_id.count(id))
      throw error(errc::parse_error, "node id " + fs[0] + " reused");
    uint32_t var = layout.var_by_name(fs[1]);
    node_ref hi = child(id, std::stoull(fs[2]));
    node_ref lo = child(id, std::stoull(fs[3]));
    by_file_id[id] = m.ite(m.mk_var(var), hi, lo);
    last_id = id;
  }
  (void)last_id;

  next_line(true);
  {
    auto fs = fields(line);
    if (fs.size() != 2 || fs[0] != "root")
      throw error(errc::truncated_payload, "missing root line");
    out.root = child(~0ull, std::stoull(fs[1]));
  }
  next_line(true);
  if (line != "end")
    throw error(errc::truncated_payload, "missing end marker");

  if (out.kind == "global") {
    if (!sel || !eliminated || !a_prev)
      throw error(errc::parse_error, "global diagram lacks selector metadata");
    out.global = global_root{out.root, *sel, *eliminated, *a_prev};
  }
  m.register_root(out.root);
  return out;
}

/* ------------------------------------------------------------------ */
/* flattened evaluation (the emitted table-style semantics)            */
/* ------------------------------------------------------------------ */

/*! \brief Diagram flattened to arrays, the exact structure the table-style
 * emitted C code carries. Children >= 0 are node indices; -1 is FALSE and
 * -2 is TRUE. */
struct flat_evaluator {
  std::vector<uint8_t> var;
  std::vector<int32_t> hi;
  std::vector<int32_t> lo;
  int32_t root = -1;

  static flat_evaluator build(bdd_manager const& m, node_ref f, bit_layout const&)
  {
    flat_evaluator fe;
    auto topo = m.topo_order(f);
    std::unordered_map<uint32_t, int32_t> index;
    auto encode = [&](uint32_t id) -> int32_t {
      if (id == 0)
        return -1;
      if (id == 1)
        return -2;
      return index.at(id);
    };
    fe.var.reserve(topo.size());
    fe.hi.reserve(topo.size());
    fe.lo.reserve(topo.size());
    for (uint32_t id : topo) {
      auto nv = m.view_id(id);
      index[id] = static_cast<int32_t>(fe.var.size());
      fe.var.push_back(static_cast<uint8_t>(m.var_at_level(nv.level)));
      fe.hi.push_back(encode(nv.hi));
      fe.lo.push_back(encode(nv.lo));
    }
    fe.root = encode(m.view(f).id);
    return fe;
  }

  bool eval_bits(uint8_t const* bits) const
  {
    int32_t i = root;
    while (i >= 0)
      i = bits[var[i]] ? hi[i] : lo[i];
    return i == -2;
  }
};

/* ------------------------------------------------------------------ */
/* standalone evaluator source generation                              */
/* ------------------------------------------------------------------ */

enum class emit_style { threaded, table };

struct emitted_evaluator {
  std::string source;
  uint64_t node_count = 0;
  uint64_t source_fp = 0;
};

inline constexpr uint64_t default_emission_cap = 5'000'000;

/*! \brief Generate a dependency-free C evaluator for the diagram.
 *
 * `threaded` spells one labeled branch per node; `table` packs the nodes
 * into constant arrays walked by a small loop. Entry points:
 *   int tablebdd_eval_bits(const unsigned char *bits);   bits in layout order
 *   int tablebdd_eval_state(unsigned bdd1, unsigned bdd0,
 *                           const unsigned *indices);    Gray-encodes inline
 */
inline emitted_evaluator emit_evaluator(bdd_manager const& m, node_ref root,
                                        bit_layout const& layout, emit_style style,
                                        uint64_t node_cap = default_emission_cap)
{
  auto topo = m.topo_order(root);
  if (topo.size() > node_cap)
    throw error(errc::emission_cap_exceeded,
                std::to_string(topo.size()) + " nodes exceed the emission cap of " +
                    std::to_string(node_cap));

  std::unordered_map<uint32_t, int64_t> index;
  auto encode = [&](uint32_t id) -> int64_t {
    if (id == 0)
      return -1;
    if (id == 1)
      return -2;
    return index.at(id);
  };

  // content fingerprint over (var, hi, lo) records
  uint64_t fp = 0xcbf29ce484222325ull;
  auto feed = [&fp](uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      fp ^= (v >> (8 * k)) & 0xFF;
      fp *= 0x100000001b3ull;
    }
  };
  std::vector<std::array<int64_t, 3>> rows;
  rows.reserve(topo.size());
  for (uint32_t id : topo) {
    auto nv = m.view_id(id);
    index[id] = static_cast<int64_t>(rows.size());
    rows.push_back({static_cast<int64_t>(m.var_at_level(nv.level)), encode(nv.hi), encode(nv.lo)});
    feed(static_cast<uint64_t>(rows.back()[0]));
    feed(static_cast<uint64_t>(rows.back()[1]));
    feed(static_cast<uint64_t>(rows.back()[2]));
  }
  int64_t root_code = encode(m.view(root).id);

  std::ostringstream os;
  char fps[17];
  std::snprintf(fps, sizeof fps, "%016llx", static_cast<unsigned long long>(fp));
  os << "/* tablebdd standalone evaluator\n";
  os << " * style: " << (style == emit_style::threaded ? "threaded" : "table") << "\n";
  os << " * nodes: " << rows.size() << "\n";
  os << " * diagram-fp: " << fps << "\n";
  os << " * inputs: bits[0.." << (m.var_count() - 1) << "] in layout order (";
  for (uint32_t v = 0; v < m.var_count(); ++v)
    os << (v ? " " : "") << layout.var_name(v);
  os << ")\n */\n\n";

  if (style == emit_style::threaded) {
    os << "int tablebdd_eval_bits(const unsigned char *bits)\n{\n";
    if (root_code < 0) {
      os << "  (void)bits;\n  return " << (root_code == -2 ? 1 : 0) << ";\n}\n";
    } else {
      auto target = [&](int64_t c) {
        if (c == -1)
          return std::string("t0");
        if (c == -2)
          return std::string("t1");
        return "n" + std::to_string(c);
      };
      os << "  goto n" << root_code << ";\n";
      for (size_t k = 0; k < rows.size(); ++k)
        os << "n" << k << ": if (bits[" << rows[k][0] << "]) goto " << target(rows[k][1])
           << "; else goto " << target(rows[k][2]) << ";\n";
      os << "t0: return 0;\nt1: return 1;\n}\n";
    }
  } else {
    size_t const n = rows.size();
    auto dump = [&](char const* name, char const* type, int which) {
      os << "static const " << type << " " << name << "[" << std::max<size_t>(n, 1) << "] = {";
      for (size_t k = 0; k < n; ++k) {
        if (k % 20 == 0)
          os << "\n  ";
        os << rows[k][which] << (k + 1 < n ? "," : "");
      }
      if (n == 0)
        os << "0";
      os << "\n};\n";
    };
    dump("bdd_var", "unsigned char", 0);
    dump("bdd_hi", "long", 1);
    dump("bdd_lo", "long", 2);
    os << "\nint tablebdd_eval_bits(const unsigned char *bits)\n{\n";
    os << "  long i = " << root_code << "L;\n";
    os << "  while (i >= 0)\n    i = bits[bdd_var[i]] ? bdd_hi[i] : bdd_lo[i];\n";
    os << "  return i == -2;\n}\n";
  }

  // convenience wrapper performing the Gray encoding inline
  os << "\nint tablebdd_eval_state(unsigned bdd1, unsigned bdd0, const unsigned *indices)\n{\n";
  os << "  unsigned char bits[" << m.var_count() << "];\n";
  os << "  static const unsigned widths[6] = {";
  for (size_t d = 0; d < 6; ++d)
    os << (d ? "," : "") << layout.widths[d];
  os << "};\n";
  os << "  unsigned g, d, b, w, base;\n";
  os << "  bits[0] = (unsigned char)(bdd1 != 0u);\n";
  os << "  bits[1] = (unsigned char)(bdd0 != 0u);\n";
  os << "  base = 2;\n";
  os << "  for (d = 0; d < 6; ++d) {\n";
  os << "    g = indices[d] ^ (indices[d] >> 1);\n";
  os << "    w = widths[d];\n";
  os << "    for (b = 0; b < w; ++b)\n";
  os << "      bits[base + b] = (unsigned char)((g >> (w - 1u - b)) & 1u);\n";
  os << "    base += w;\n";
  os << "  }\n";
  os << "  return tablebdd_eval_bits(bits);\n}\n";

  emitted_evaluator out;
  out.source = os.str();
  out.node_count = rows.size();
  out.source_fp = fp;
  return out;
}

} // namespace tablebdd
