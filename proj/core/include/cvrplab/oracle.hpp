#pragma once

#include <cstdint>
#include <vector>

#include "cvrplab/core.hpp"
#include "cvrplab/policy.hpp"

namespace cvrplab {

struct OracleResult {
  double cost = 0.0;
  Solution solution;
  std::uint64_t enumerated = 0;  // capacity-feasible set partitions visited
};

// Exact optimum by exhaustion: best ordering of every capacity-feasible
// customer subset (one direction per route), then every set partition.
// Throws PreconditionError above n_limit customers.
OracleResult brute_force_optimum(const Instance& instance, int n_limit = 9);

struct EnumeratedTrajectory {
  std::vector<int> tokens;
  // log p(first customer) + logprob_after_start.
  double logprob = 0.0;
  // Sum of log(p + 1e-5) over every step after the first customer, the
  // score beam search accumulates.
  double logprob_after_start = 0.0;
};

// Every token sequence the decode state machine admits, depth first in
// increasing node order. Throws PreconditionError above n_limit customers.
std::vector<EnumeratedTrajectory> enumerate_trajectories(const Policy& policy, const Instance& instance,
                                                         int n_limit = 6);

}  // namespace cvrplab
