#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "state_codec.hpp"

namespace tablebdd {

/* Grid configuration file: one JSON section per dimension, either an
 * explicit breakpoint list or a (min, max, count) linear spec:
 *
 *   { "tau":   {"min": 0.0, "max": 100.0, "count": 10},
 *     "rho":   {"breakpoints": [0.0, 1550.0, ...]},
 *     ... }
 */

inline quantization_grid grid_from_json(nlohmann::json const& j, bool relaxed)
{
  quantization_grid g;
  for (size_t d = 0; d < 6; ++d) {
    std::string key(dimension_names[d]);
    if (!j.contains(key))
      throw error(errc::parse_error, "grid config misses dimension '" + key + "'");
    auto const& sec = j.at(key);
    if (sec.contains("breakpoints")) {
      g.points[d] = sec.at("breakpoints").get<std::vector<double>>();
    } else if (sec.contains("min") && sec.contains("max") && sec.contains("count")) {
      double lo = sec.at("min").get<double>();
      double hi = sec.at("max").get<double>();
      uint32_t n = sec.at("count").get<uint32_t>();
      if (n < 2 || !(lo < hi))
        throw error(errc::bad_grid, key + ": need count >= 2 and min < max");
      g.points[d].resize(n);
      for (uint32_t i = 0; i < n; ++i)
        g.points[d][i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    } else {
      throw error(errc::parse_error, key + ": expected breakpoints or (min, max, count)");
    }
  }
  g.validate(relaxed);
  return g;
}

inline nlohmann::json grid_to_json(quantization_grid const& g)
{
  nlohmann::json j;
  for (size_t d = 0; d < 6; ++d)
    j[std::string(dimension_names[d])] = {{"breakpoints", g.points[d]}};
  return j;
}

inline quantization_grid load_grid_file(std::string const& path, bool relaxed)
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
  return grid_from_json(j, relaxed);
}

/*! \brief Resolve a --grid argument: a built-in name or config file path.
 * Built-ins: "default" (operational cardinalities), "reduced" (4,8,8,8,4,4),
 * "tiny" (2,2,2,2,2,2); the non-default ones require relaxed validation. */
inline quantization_grid resolve_grid_spec(std::string const& spec, bool relaxed)
{
  quantization_grid g;
  if (spec.empty() || spec == "default" || spec == "standard")
    g = quantization_grid::standard();
  else if (spec == "reduced")
    g = quantization_grid::linear({4, 8, 8, 8, 4, 4});
  else if (spec == "tiny")
    g = quantization_grid::linear({2, 2, 2, 2, 2, 2});
  else
    return load_grid_file(spec, relaxed);
  g.validate(relaxed);
  return g;
}

} // namespace tablebdd
