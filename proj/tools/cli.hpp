// Copyright 2026 The coopcov Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef COOPCOV_TOOLS_CLI_HPP
#define COOPCOV_TOOLS_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace coopcov::cli {

enum exit_code : int { ok = 0, config_error = 2, numerical_error = 3, simulation_error = 4 };

// One output table; every command emits exactly one.
using Field = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Field>> rows;
};

void write_csv(const Table& t, std::ostream& out);
void write_json(const Table& t, std::ostream& out);

// Parses argv and runs one subcommand. Results go to `out` unless --out is
// given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coopcov::cli

#endif  // COOPCOV_TOOLS_CLI_HPP
