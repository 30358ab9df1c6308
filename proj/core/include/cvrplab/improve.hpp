#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cvrplab/core.hpp"

namespace cvrplab {

enum class Operator {
  relocate,            // intra: move one customer to another position
  exchange,            // intra: swap two customers
  two_opt,             // intra: reverse a subsequence
  or_opt,              // intra: move a segment of 1..3 customers
  two_opt_star,        // inter: swap route tails
  insert_inter,        // inter: move one customer to another route
  swap_inter,          // inter: swap two customers of different routes
  cross,               // inter: exchange two segments (one may be empty)
  lambda_interchange,  // inter: CROSS with optional reversal of each segment
};

inline constexpr std::array<Operator, 9> kAllOperators{
    Operator::relocate,     Operator::exchange,     Operator::two_opt,
    Operator::or_opt,       Operator::two_opt_star, Operator::insert_inter,
    Operator::swap_inter,   Operator::cross,        Operator::lambda_interchange};

std::string_view to_string(Operator op);
std::optional<Operator> parse_operator(std::string_view name);

// Segment bounds for the operators that move sequences.
struct MoveParams {
  int or_opt_max = 3;  // or_opt moves segments of length 1..or_opt_max
  int cross_max = 3;   // cross segments have length 0..cross_max
  int lambda = 2;      // lambda_interchange segments have length 0..lambda
};

// One neighborhood move. Field meaning per operator (positions are 0-based
// indices into the route's customer list):
//   relocate      r1; a = from, b = target position in the resulting route
//   exchange      r1; a < b positions swapped
//   two_opt       r1; a < b, customers a..b reversed
//   or_opt        r1; a = segment start, len1 = segment length,
//                 b = insertion slot in the route with the segment removed
//   two_opt_star  r1 < r2; a, b = prefix lengths kept; tails swapped
//   insert_inter  r1 != r2; a = position in r1, b = slot in r2
//   swap_inter    r1 < r2; a, b = positions swapped
//   cross /
//   lambda_interchange
//                 r1 < r2; a, len1 = segment of r1; b, len2 = segment of r2.
//                 An empty segment is an insertion slot. rev1/rev2 reverse
//                 the segment on reinsertion (lambda_interchange only).
struct MoveSpec {
  Operator op = Operator::relocate;
  int r1 = 0;
  int r2 = 0;
  int a = 0;
  int b = 0;
  int len1 = 0;
  int len2 = 0;
  bool rev1 = false;
  bool rev2 = false;
  double delta = 0.0;
  std::uint64_t source = 0;  // fingerprint of the solution the move was enumerated from
};

std::uint64_t fingerprint(const Solution& solution);

// Visits every capacity-feasible move of one operator class exactly once.
// The visitor returns false to stop early. Deltas are computed from the
// boundary edges only.
void for_each_move(const Instance& instance, const Solution& solution, Operator op, const MoveParams& params,
                   const std::function<bool(const MoveSpec&)>& visit);

std::vector<MoveSpec> enumerate_moves(const Instance& instance, const Solution& solution, Operator op,
                                      const MoveParams& params = {});

// Returns the neighbor solution; the input is untouched. Throws
// StructuralError when the move was not enumerated from this solution.
Solution apply_move(const Instance& instance, const Solution& solution, const MoveSpec& move);

enum class SearchStrategy { first_improvement, best_improvement };

struct SearchConfig {
  SearchStrategy strategy = SearchStrategy::first_improvement;
  std::vector<Operator> operators{kAllOperators.begin(), kAllOperators.end()};
  int max_passes = 1'000'000;
  MoveParams params;
  // A move improves when delta < -epsilon.
  double epsilon = 1e-10;
};

struct LocalSearchResult {
  Solution solution;
  int moves_applied = 0;
  bool local_optimum = false;      // false when max_passes stopped the search
  std::vector<double> cost_trace;  // cost after each accepted move, initial first
};

// Each pass finds one improving move (the first found, or the best over the
// whole operator set) and applies it.
LocalSearchResult local_search(const Instance& instance, const Solution& solution, const SearchConfig& config = {});

// The best improving move across the given operators, if any.
std::optional<MoveSpec> best_move(const Instance& instance, const Solution& solution,
                                  std::span<const Operator> operators, const MoveParams& params,
                                  double epsilon = 1e-10);

// 2-opt on a single route until no reversal improves it.
Route two_opt_route(const Instance& instance, Route route);

}  // namespace cvrplab
