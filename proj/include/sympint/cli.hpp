#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Batch front end. Subcommands:
//   simulate   - run one trajectory, emit per-step CSV
//   converge   - step-size refinement study against the fine reference
//   resonance  - endpoint-ratio scan over a grid of coarse steps
//   expm-bench - per-backend exponentiation timing and product counts
//   verify     - structural identity suite, tabulated residuals
// Exit codes: 0 success, 1 numerical failure (diagnostic line on the error
// stream), 2 usage or configuration error.

namespace sympint::cli {

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sympint::cli
