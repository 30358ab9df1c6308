#include "cvrplab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cvrplab/decode.hpp"
#include "cvrplab/errors.hpp"

namespace cvrplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SubsetRoute {
  double cost = kInf;
  Route route;
};

// Cheapest closed route over the customers in mask. Only orderings whose
// first customer is smaller than the last are tried; the reverse has equal cost.
SubsetRoute best_route(const Instance& instance, std::uint32_t mask) {
  Route perm;
  for (int c = 1; c <= instance.size(); ++c)
    if (mask & (1u << (c - 1))) perm.push_back(c);
  SubsetRoute best;
  if (perm.size() == 1) {
    best.cost = route_cost(instance, perm);
    best.route = perm;
    return best;
  }
  do {
    if (perm.front() > perm.back()) continue;
    const double cost = route_cost(instance, perm);
    if (cost < best.cost) {
      best.cost = cost;
      best.route = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

OracleResult brute_force_optimum(const Instance& instance, int n_limit) {
  const int n = instance.size();
  if (n > n_limit) throw PreconditionError("brute force refuses " + std::to_string(n) + " customers (limit " +
                                           std::to_string(n_limit) + ")");
  if (n > 20) throw PreconditionError("brute force limited to 20 customers");

  const std::uint32_t full = (1u << n) - 1;
  std::vector<SubsetRoute> routes(std::size_t{full} + 1);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    double load = 0.0;
    for (int c = 1; c <= n; ++c)
      if (mask & (1u << (c - 1))) load += instance.demand(c);
    if (load <= instance.capacity()) routes[mask] = best_route(instance, mask);
  }

  OracleResult result;
  double best_cost = kInf;
  std::vector<std::uint32_t> chosen, best_parts;

  // Partitions: the lowest unassigned customer picks the subset it joins.
  auto recurse = [&](auto& self, std::uint32_t remaining, double cost) -> void {
    if (remaining == 0) {
      ++result.enumerated;
      if (cost < best_cost) {
        best_cost = cost;
        best_parts = chosen;
      }
      return;
    }
    const std::uint32_t low = remaining & (~remaining + 1);
    const std::uint32_t rest = remaining ^ low;
    for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
      const std::uint32_t part = sub | low;
      if (routes[part].cost < kInf) {
        chosen.push_back(part);
        self(self, remaining ^ part, cost + routes[part].cost);
        chosen.pop_back();
      }
      if (sub == 0) break;
    }
  };
  recurse(recurse, full, 0.0);

  std::vector<Route> out;
  for (std::uint32_t part : best_parts) out.push_back(routes[part].route);
  result.solution = make_solution(instance, std::move(out));
  result.cost = result.solution.cost;
  return result;
}

std::vector<EnumeratedTrajectory> enumerate_trajectories(const Policy& policy, const Instance& instance, int n_limit) {
  if (instance.size() > n_limit)
    throw PreconditionError("trajectory enumeration refuses " + std::to_string(instance.size()) +
                            " customers (limit " + std::to_string(n_limit) + ")");
  const auto bound = policy.bind(instance);
  std::vector<EnumeratedTrajectory> out;

  auto dfs = [&](auto& self, const DecodeState& state, double start_logprob, double score) -> void {
    if (state.complete()) {
      out.push_back({state.partial, start_logprob + score, score});
      return;
    }
    const auto mask = feasible_mask(instance, state);
    const Logits logits = bound->step(state, mask);
    const auto probs = softmax(logits.scores);
    const bool first_move = state.selected_count == 1;
    for (int a = 0; a < instance.node_count(); ++a) {
      if (!mask[static_cast<std::size_t>(a)]) continue;
      DecodeState next = state;
      apply_action(instance, next, a);
      const double p = probs[static_cast<std::size_t>(a)];
      if (first_move)
        self(self, next, std::log(p), score);
      else
        self(self, next, start_logprob, score + std::log(p + kBeamSmoothing));
    }
  };
  dfs(dfs, DecodeState::initial(instance), 0.0, 0.0);
  return out;
}

}  // namespace cvrplab
