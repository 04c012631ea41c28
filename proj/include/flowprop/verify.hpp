#pragma once

#include <cstdint>
#include <iosfwd>

namespace flowprop {

// Self-check suites driving the production kernels against the oracle
// references (randomized warp equivalence, finite-difference gradients,
// quadratic NMS, aggregation contracts). Prints one line per suite; returns
// the number of failed suites.
int run_verification(std::ostream& os, std::uint64_t seed = 1);

} // namespace flowprop
