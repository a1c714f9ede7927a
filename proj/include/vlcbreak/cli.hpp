#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlcbreak/cipher.hpp"

namespace vlcbreak::cli {

/// Seed used when --seed is not given.
inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 when an attack ends Failed/Ambiguous or a stream does not
/// decode, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Five tables in one text file, each introduced by a `role <name>` line.
std::string format_table_set(const TableSet& tables);
TableSet parse_table_set(const std::string& text);

}  // namespace vlcbreak::cli
