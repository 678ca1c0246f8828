#pragma once

#include <ostream>

#include "report.hpp"

namespace survscreen {
class SurvivalDataset;
}

namespace survscreen::cli {

// Entry point shared by the executable and the tests. Exit codes: 0 success
// (whatever the test decision), 2 bad input or usage, 3 numerical degeneracy.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Runs the configured screen on an ingested dataset.
Report screen_dataset(const SurvivalDataset& data, const RunConfig& config, int threads);

// Threads from the flag value, else SURVSCREEN_THREADS, else all cores.
// "auto" means all cores.
int resolve_threads(const std::string& flag);

}  // namespace survscreen::cli
