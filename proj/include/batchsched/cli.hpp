#pragma once

#include <iosfwd>

namespace batchsched {

inline constexpr const char* kToolVersion = "0.1.0";

/// Subcommands: gen-instance, train, eval, sweep, simulate, report.
/// Returns 0 on success; otherwise prints a one-line diagnostic to `err`.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace batchsched
