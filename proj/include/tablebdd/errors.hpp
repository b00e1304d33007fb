#pragma once

#include <stdexcept>
#include <string>

namespace tablebdd {

/*! Error categories raised by the library.
 *
 * Each corresponds to a distinct failure contract; tests match on the code,
 * not on message text.
 */
enum class errc {
  undeclared_variable,
  cross_manager,
  frozen_level,
  missing_assignment,
  node_overflow,
  bad_grid,
  index_out_of_range,
  bad_magic,
  version_mismatch,
  truncated_payload,
  invalid_entry,
  dangling_node,
  cyclic_reference,
  fingerprint_mismatch,
  duplicate_selector,
  partition_unverified,
  invalid_state,
  inapplicable_property,
  emission_cap_exceeded,
  io_error,
  parse_error,
};

inline const char* errc_name(errc c)
{
  switch (c) {
  case errc::undeclared_variable: return "undeclared_variable";
  case errc::cross_manager: return "cross_manager";
  case errc::frozen_level: return "frozen_level";
  case errc::missing_assignment: return "missing_assignment";
  case errc::node_overflow: return "node_overflow";
  case errc::bad_grid: return "bad_grid";
  case errc::index_out_of_range: return "index_out_of_range";
  case errc::bad_magic: return "bad_magic";
  case errc::version_mismatch: return "version_mismatch";
  case errc::truncated_payload: return "truncated_payload";
  case errc::invalid_entry: return "invalid_entry";
  case errc::dangling_node: return "dangling_node";
  case errc::cyclic_reference: return "cyclic_reference";
  case errc::fingerprint_mismatch: return "fingerprint_mismatch";
  case errc::duplicate_selector: return "duplicate_selector";
  case errc::partition_unverified: return "partition_unverified";
  case errc::invalid_state: return "invalid_state";
  case errc::inapplicable_property: return "inapplicable_property";
  case errc::emission_cap_exceeded: return "emission_cap_exceeded";
  case errc::io_error: return "io_error";
  case errc::parse_error: return "parse_error";
  }
  return "unknown";
}

class error : public std::runtime_error {
public:
  error(errc code, std::string const& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
  {
  }

  errc code() const noexcept { return code_; }

private:
  errc code_;
};

} // namespace tablebdd
