#pragma once

#include <string>
#include <vector>

namespace qrank {

// Subcommands: prepare, train, rank, evaluate, ablate, curve, gradcheck.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace qrank
