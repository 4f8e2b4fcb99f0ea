#ifndef CESTGM_CLI_COMMANDS_HPP
#define CESTGM_CLI_COMMANDS_HPP

#include <string>
#include <vector>

namespace cestgm::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 1 constraint violation, 2 parse failure, 3 spectral
// non-convergence, 4 NotHilbertSchmidt without --force, 5 other runtime error.
int run(const std::vector<std::string>& args);

}  // namespace cestgm::cli

#endif
