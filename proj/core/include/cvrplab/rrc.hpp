#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "cvrplab/core.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/policy.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

enum class AcceptMode { greedy, simulated_annealing };

std::string_view to_string(AcceptMode mode);
std::optional<AcceptMode> parse_accept_mode(std::string_view name);

struct RrcConfig {
  int iterations = 100;
  int seg_min = 4;
  int seg_max = 50;
  AcceptMode accept = AcceptMode::simulated_annealing;
  std::optional<double> t0;  // defaults to 1% of the initial cost
  double cooling = 0.99;
  Strategy strategy = Strategy::argmax;  // how segments are re-decoded
  double epsilon = 0.1;
  double temperature = 1.0;  // Gumbel temperature, not the annealing one
  std::uint64_t seed = 0;

  // Throws PreconditionError unless seg_min >= 2, seg_max >= seg_min,
  // 0 < cooling < 1, t0 >= 0 and iterations >= 0.
  void validate() const;
};

// Span [first, last) of the flat tour tokens (0 r1 0 r2 ... 0), strictly
// inside the two outer depot tokens. start/dest are tokens[first - 1] and
// tokens[last], the fixed context of the re-decode.
struct Segment {
  std::size_t first = 1;
  std::size_t last = 1;
  int start = 0;
  int dest = 0;

  std::size_t length() const { return last - first; }
};

// Length uniform on [seg_min, min(seg_max, interior)], first position uniform
// among the spans that fit. seg_min is clipped to the interior length.
Segment sample_segment(std::span<const int> tokens, Rng& rng, int seg_min, int seg_max);

struct Reconstruction {
  std::vector<int> tokens;  // full flat tour with the segment replaced
  double delta = 0.0;       // new segment path cost - old, +infinity if none found
};

// Re-decodes the customers inside the segment, starting from the load already
// on the route at the left boundary and ending at the right boundary. A depot
// return is inserted before the right boundary when the joined route would
// exceed capacity.
Reconstruction reconstruct_segment(const BoundPolicy& policy, const Instance& instance, std::span<const int> tokens,
                                   const Segment& segment, const DecodeConfig& config, Rng& rng);

// Greedy: delta < 0. Simulated annealing: delta < 0, otherwise probability
// exp(-delta / T) for T > 0 and rejection at T = 0 (no draw is consumed).
bool accept(double delta, double temperature, Rng& rng, AcceptMode mode);

struct RrcTraceRow {
  int iteration = 0;
  double delta = 0.0;
  double temperature = 0.0;
  bool accepted = false;
  double incumbent_cost = 0.0;
  double best_cost = 0.0;
};

struct RrcResult {
  Solution best;
  Solution incumbent;
  std::vector<RrcTraceRow> trace;
};

// Sample, re-decode, accept; T_k = T0 * cooling^k. Returns the best solution
// seen, which never costs more than the initial one.
RrcResult rrc_run(const Policy& policy, const Instance& instance, const Solution& initial, const RrcConfig& config);

void write_trace_csv(const std::vector<RrcTraceRow>& trace, std::ostream& out);

}  // namespace cvrplab
