#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <sys/utsname.h>

#include "compressor.hpp"
#include "emitter.hpp"
#include "state_codec.hpp"
#include "table_io.hpp"

namespace tablebdd {

enum class bench_backend { bdd_eval, table_lookup, emitted_evaluator };

inline std::string_view to_string(bench_backend b)
{
  switch (b) {
  case bench_backend::bdd_eval: return "bdd-eval";
  case bench_backend::table_lookup: return "table-lookup";
  case bench_backend::emitted_evaluator: return "emitted-evaluator";
  }
  return "?";
}

inline bench_backend parse_backend(std::string_view s)
{
  if (s == "bdd-eval") return bench_backend::bdd_eval;
  if (s == "table-lookup") return bench_backend::table_lookup;
  if (s == "emitted-evaluator") return bench_backend::emitted_evaluator;
  throw error(errc::parse_error, "unknown backend '" + std::string(s) + "'");
}

/*! \brief Per-query latency statistics over a deterministic query stream. */
struct bench_report {
  bench_backend backend = bench_backend::bdd_eval;
  uint64_t queries = 0;
  double t_min_us = 0, t_max_us = 0, t_mean_us = 0;
  uint64_t seed = 0;
  uint32_t threads = 1;
  std::array<uint64_t, 5> histogram{};
  uint64_t stream_fp = 0; ///< order-independent digest of (query, advisory) pairs
  std::string platform;
};

inline std::string platform_note()
{
  struct utsname u;
  if (uname(&u) != 0)
    return "unknown";
  return std::string(u.sysname) + " " + u.machine + " " + u.release;
}

/* ------------------------------------------------------------------ */
/* deterministic query stream                                          */
/* ------------------------------------------------------------------ */

/*! \brief Uniform random valid states, deterministic by seed; O(1) seek so
 * multi-threaded runs draw the identical stream. */
struct query_stream {
  uint64_t state;

  query_stream(uint64_t seed, uint64_t first_query)
      : state(seed + first_query * 6 * 0x9E3779B97F4A7C15ull)
  {
  }

  state_index next(std::array<uint32_t, 6> const& cards)
  {
    state_index s;
    for (size_t d = 0; d < 6; ++d) {
      uint64_t x = detail::splitmix64(state);
      s.i[d] = static_cast<uint32_t>(
          (static_cast<unsigned __int128>(x) * cards[d]) >> 64);
    }
    return s;
  }
};

/* ------------------------------------------------------------------ */
/* backend classifiers                                                 */
/* ------------------------------------------------------------------ */

/*! \brief Classifier with the emitted table-style evaluator semantics. */
struct flat_classifier {
  flat_evaluator fe;
  selector_map sel;
  advisory eliminated;
  bit_layout layout;

  static flat_classifier build(bdd_manager const& m, global_root const& g,
                               bit_layout const& layout)
  {
    return {flat_evaluator::build(m, g.root, layout), g.sel, g.eliminated, layout};
  }

  advisory operator()(state_index const& s) const
  {
    uint8_t bits[64] = {};
    for (size_t d = 0; d < 6; ++d) {
      uint32_t w = layout.widths[d];
      uint32_t code = s.i[d] ^ (s.i[d] >> 1);
      uint32_t base = layout.first_var(static_cast<dimension>(d));
      for (uint32_t b = 0; b < w; ++b)
        bits[base + b] = static_cast<uint8_t>((code >> (w - 1 - b)) & 1u);
    }
    for (uint32_t cand = 0; cand < 5; ++cand) {
      advisory adv = static_cast<advisory>(cand);
      if (!sel.has(adv))
        continue;
      auto [b1, b0] = sel.bits(adv);
      bits[bit_layout::var_bdd1] = b1 ? 1 : 0;
      bits[bit_layout::var_bdd0] = b0 ? 1 : 0;
      if (fe.eval_bits(bits))
        return adv;
    }
    return eliminated;
  }
};

/*! \brief Classifier walking the manager-resident diagram. */
struct bdd_classifier {
  bdd_manager const* m;
  global_root g;
  bit_layout layout;
  quantization_grid const* grid;

  advisory operator()(state_index const& s) const
  {
    assignment a;
    layout.assign_state(s, a);
    for (uint32_t cand = 0; cand < 5; ++cand) {
      advisory adv = static_cast<advisory>(cand);
      if (!g.sel.has(adv))
        continue;
      auto [b1, b0] = g.sel.bits(adv);
      a.set(bit_layout::var_bdd1, b1);
      a.set(bit_layout::var_bdd0, b0);
      if (m->eval(g.root, a))
        return adv;
    }
    return g.eliminated;
  }
};

/*! \brief Classifier by direct table lookup (table fully preloaded). */
struct table_classifier {
  advisory_table const* t;
  std::array<uint32_t, 6> cards;

  advisory operator()(state_index const& s) const
  {
    uint64_t off = 0;
    for (size_t d = 0; d < 6; ++d)
      off = off * cards[d] + s.i[d];
    return t->at(off);
  }
};

/* ------------------------------------------------------------------ */
/* runner                                                              */
/* ------------------------------------------------------------------ */

/*! \brief Time `classify_fn` per query over n queries from the seeded
 * stream. Multi-threaded runs merge by global min/max and weighted mean. */
template <typename Fn>
bench_report run_bench(Fn const& classify_fn, std::array<uint32_t, 6> const& cards, uint64_t n,
                       uint64_t seed, uint32_t threads, bench_backend tag)
{
  if (n < 1)
    throw error(errc::invalid_state, "query count must be >= 1");
  threads = std::max(1u, threads);

  struct partial {
    double min_ns = 1e300, max_ns = 0, sum_ns = 0;
    std::array<uint64_t, 5> hist{};
    uint64_t fp = 0;
  };
  std::vector<partial> parts(threads);

  auto worker = [&](uint32_t k) {
    uint64_t q0 = n * k / threads, q1 = n * (k + 1) / threads;
    query_stream qs(seed, q0);
    partial& p = parts[k];
    for (uint64_t q = q0; q < q1; ++q) {
      state_index s = qs.next(cards);
      auto t0 = std::chrono::steady_clock::now();
      advisory a = classify_fn(s);
      auto t1 = std::chrono::steady_clock::now();
      double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
      p.sum_ns += ns;
      p.min_ns = std::min(p.min_ns, ns);
      p.max_ns = std::max(p.max_ns, ns);
      ++p.hist[static_cast<size_t>(a)];
      p.fp ^= detail::mix64(q * 0x9E3779B97F4A7C15ull ^ static_cast<uint64_t>(a));
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (uint32_t k = 0; k < threads; ++k)
      pool.emplace_back(worker, k);
    for (auto& th : pool)
      th.join();
  }

  bench_report r;
  r.backend = tag;
  r.queries = n;
  r.seed = seed;
  r.threads = threads;
  r.platform = platform_note();
  double sum = 0;
  double min_ns = 1e300, max_ns = 0;
  for (auto const& p : parts) {
    sum += p.sum_ns;
    min_ns = std::min(min_ns, p.min_ns);
    max_ns = std::max(max_ns, p.max_ns);
    for (size_t a = 0; a < 5; ++a)
      r.histogram[a] += p.hist[a];
    r.stream_fp ^= p.fp;
  }
  r.t_min_us = min_ns / 1000.0;
  r.t_max_us = max_ns / 1000.0;
  r.t_mean_us = sum / 1000.0 / static_cast<double>(n);
  return r;
}

/*! \brief Feed both classifiers the identical stream; report the first
 * disagreeing query if any. */
struct backend_mismatch {
  uint64_t query_index;
  state_index state;
  advisory first;
  advisory second;
};

template <typename FnA, typename FnB>
std::optional<backend_mismatch> compare_backends(FnA const& fa, FnB const& fb,
                                                 std::array<uint32_t, 6> const& cards, uint64_t n,
                                                 uint64_t seed)
{
  query_stream qs(seed, 0);
  for (uint64_t q = 0; q < n; ++q) {
    state_index s = qs.next(cards);
    advisory a = fa(s), b = fb(s);
    if (a != b)
      return backend_mismatch{q, s, a, b};
  }
  return std::nullopt;
}

} // namespace tablebdd
