#pragma once

// `trits` command-line entry point, callable in-process for tests.
//
//   trits train   --data CSV [--config FILE] [--override k=v]... [--seed N] [--horizons 96,192] --out DIR
//   trits eval    --data CSV --checkpoint DIR [--horizons ...]
//   trits predict --data CSV --checkpoint DIR [--out DIR]
//   trits ablate  --data CSV [--config FILE] [--override k=v]... --out DIR
//   trits stats   --data CSV [--data CSV]... [--config FILE]
//   trits plot    --out DIR [--scaling] [--config FILE]
//
// Exit codes: 0 success, 1 runtime failure (missing file, bad data,
// checkpoint mismatch), 2 usage or configuration error.

#include <iosfwd>
#include <string>
#include <vector>

#include "trits/vision_branch.hpp"

namespace trits {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// Median wall-clock seconds of a no-grad vision-branch forward on a random
/// [batch, L, C] input.
double vision_forward_seconds(const VisionConfig& cfg, std::size_t lookback, std::size_t horizon,
                              std::size_t channels, std::size_t period, std::size_t batch, std::size_t repeats,
                              std::uint64_t seed = 7);

}  // namespace trits
