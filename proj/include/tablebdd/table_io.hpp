#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "state_codec.hpp"

namespace tablebdd {

/*! \brief Dense ground-truth mapping from every state index tuple to one of
 * the 5 advisories, for one a_prev. Entries are row-major in dimension order
 * (tau, rho, theta, psi, v_own, v_int). */
struct advisory_table {
  quantization_grid grid;
  advisory a_prev = advisory::coc;
  std::vector<uint8_t> entries;

  uint64_t size() const { return entries.size(); }

  advisory at(uint64_t offset) const { return static_cast<advisory>(entries[offset]); }

  advisory at(state_index const& s) const
  {
    validate_state(grid, s);
    return at(row_major_offset(grid, s));
  }

  void set(state_index const& s, advisory a)
  {
    validate_state(grid, s);
    entries[row_major_offset(grid, s)] = static_cast<uint8_t>(a);
  }
};

/*! \brief Contiguous slice of a table; chunks tile the entries in ascending
 * offset order without overlap. */
struct table_chunk {
  uint64_t start_offset;
  std::span<const uint8_t> entries;
};

inline std::vector<table_chunk> stream_chunks(advisory_table const& t, uint64_t chunk_size)
{
  if (chunk_size < 1)
    throw error(errc::invalid_state, "chunk size must be >= 1");
  std::vector<table_chunk> out;
  uint64_t n = t.size();
  for (uint64_t off = 0; off < n; off += chunk_size) {
    uint64_t len = std::min(chunk_size, n - off);
    out.push_back({off, std::span<const uint8_t>(t.entries.data() + off, len)});
  }
  return out;
}

inline constexpr uint64_t default_chunk_size = 1u << 20;

/* ------------------------------------------------------------------ */
/* synthetic generation                                                */
/* ------------------------------------------------------------------ */

namespace detail {
inline uint64_t splitmix64(uint64_t& state)
{
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
} // namespace detail

/*! \brief Deterministic synthetic stand-in for the proprietary tables.
 *
 * Geometric rule: COC wherever a pseudo-range score (range plus
 * time-to-conflict scaled by closing speed) exceeds an a_prev-dependent
 * threshold; otherwise the turn side follows the sign of the bearing-index
 * offset from center and the strength follows a close-range band. A
 * seed-dependent perturbation flips `flip_fraction` of the entries to give
 * the regions irregular boundaries.
 */
inline advisory_table generate_synthetic(quantization_grid const& grid, advisory a_prev,
                                         uint64_t seed, double flip_fraction = 0.001)
{
  advisory_table t;
  t.grid = grid;
  t.a_prev = a_prev;
  auto const c = grid.cardinalities();
  t.entries.resize(grid.state_count());

  auto norms = [&](dimension d) {
    uint32_t n = c[static_cast<size_t>(d)];
    std::vector<double> v(n);
    for (uint32_t i = 0; i < n; ++i)
      v[i] = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    return v;
  };
  std::vector<double> ntau = norms(dimension::tau), nrho = norms(dimension::rho),
                      nvo = norms(dimension::v_own), nvi = norms(dimension::v_int);

  double const thr = 0.42 + 0.03 * static_cast<double>(a_prev);
  uint64_t const noise_tag = seed ^ (0x5851F42D4C957F2Dull * (static_cast<uint64_t>(a_prev) + 1));

  uint64_t off = 0;
  for (uint32_t it = 0; it < c[0]; ++it) {
    for (uint32_t ir = 0; ir < c[1]; ++ir) {
      double const r_base = 0.55 * nrho[ir] + 0.25 * ntau[it];
      double const r_coef = 0.10 * ntau[it]; // times (nvo + nvi)
      bool const strong = nrho[ir] < 0.30;
      for (uint32_t ith = 0; ith < c[2]; ++ith) {
        bool const left = 2 * ith < c[2] - 1;
        advisory const turn = left ? (strong ? advisory::sl : advisory::wl)
                                   : (strong ? advisory::sr : advisory::wr);
        for (uint32_t ip = 0; ip < c[3]; ++ip) {
          for (uint32_t io = 0; io < c[4]; ++io) {
            for (uint32_t ii = 0; ii < c[5]; ++ii, ++off) {
              double const score = r_base + r_coef * (nvo[io] + nvi[ii]);
              uint8_t a = static_cast<uint8_t>(score > thr ? advisory::coc : turn);
              if (flip_fraction > 0.0) {
                uint64_t st = noise_tag ^ (off * 0x9E3779B97F4A7C15ull);
                uint64_t h = detail::splitmix64(st);
                if (static_cast<double>(h >> 11) * 0x1.0p-53 < flip_fraction)
                  a = static_cast<uint8_t>((a + 1 + (h & 3)) % 5);
              }
              t.entries[off] = a;
            }
          }
        }
      }
    }
  }
  return t;
}

/* ------------------------------------------------------------------ */
/* binary table format                                                 */
/* ------------------------------------------------------------------ */

/* Layout (little endian):
 *   bytes 0..7   magic "TBDDTAB1"
 *   bytes 8..11  format version (1)
 *   bytes 12..15 reserved (0)
 *   bytes 16..39 six u32 cardinalities (tau, rho, theta, psi, v_own, v_int)
 *   byte  40     a_prev (0..4)
 *   bytes 41..   one entry byte per state (0..4), row-major
 */
inline constexpr char table_magic[8] = {'T', 'B', 'D', 'D', 'T', 'A', 'B', '1'};
inline constexpr uint32_t table_format_version = 1;

inline void write_table(advisory_table const& t, std::string const& path)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "' for writing");
  f.write(table_magic, 8);
  auto put_u32 = [&f](uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    f.write(b, 4);
  };
  put_u32(table_format_version);
  put_u32(0);
  for (uint32_t card : t.grid.cardinalities())
    put_u32(card);
  char ap = static_cast<char>(t.a_prev);
  f.write(&ap, 1);
  f.write(reinterpret_cast<char const*>(t.entries.data()),
          static_cast<std::streamsize>(t.entries.size()));
  if (!f)
    throw error(errc::io_error, "write failed for '" + path + "'");
}

/*! \brief Read a table; the optional grid supplies breakpoints and must match
 * the header cardinalities, otherwise a default linear grid is attached. */
inline advisory_table read_table(std::string const& path,
                                 quantization_grid const* grid = nullptr)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw error(errc::io_error, "cannot open '" + path + "'");
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, table_magic, 8) != 0)
    throw error(errc::bad_magic, "'" + path + "' is not a table file");
  auto get_u32 = [&f, &path]() {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
      throw error(errc::truncated_payload, "'" + path + "': header cut short");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  };
  uint32_t version = get_u32();
  if (version != table_format_version)
    throw error(errc::version_mismatch, "table format version " + std::to_string(version));
  get_u32(); // reserved
  std::array<uint32_t, 6> cards{};
  uint64_t n = 1;
  for (auto& card : cards) {
    card = get_u32();
    if (card < 2 || card > (1u << 20))
      throw error(errc::bad_grid, "implausible cardinality " + std::to_string(card));
    n *= card;
  }
  char ap;
  if (!f.read(&ap, 1))
    throw error(errc::truncated_payload, "'" + path + "': header cut short");
  if (static_cast<unsigned char>(ap) > 4)
    throw error(errc::invalid_entry, "a_prev byte " + std::to_string(ap));

  advisory_table t;
  t.a_prev = static_cast<advisory>(ap);
  if (grid) {
    if (grid->cardinalities() != cards)
      throw error(errc::bad_grid, "grid cardinalities do not match the table header");
    t.grid = *grid;
  } else {
    t.grid = quantization_grid::linear(cards);
  }
  t.entries.resize(n);
  f.read(reinterpret_cast<char*>(t.entries.data()), static_cast<std::streamsize>(n));
  if (static_cast<uint64_t>(f.gcount()) != n)
    throw error(errc::truncated_payload, "'" + path + "': expected " + std::to_string(n) +
                                             " entries, got " + std::to_string(f.gcount()));
  char extra;
  if (f.read(&extra, 1))
    throw error(errc::invalid_entry, "'" + path + "': trailing bytes after payload");
  for (uint8_t e : t.entries)
    if (e > 4)
      throw error(errc::invalid_entry, "entry byte " + std::to_string(e));
  return t;
}

} // namespace tablebdd
